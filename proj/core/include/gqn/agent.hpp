#pragma once

// Off-policy learners: the graph Q-network trained from the global reward
// with an additive value decomposition, and per-cell learners used by the
// DQN / N-DQN / GAQ baselines. Both use a target network, double Q-learning
// and prioritized replay.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gqn/model.hpp"
#include "gqn/optim.hpp"
#include "gqn/replay.hpp"

namespace gqn {

struct EpsilonSchedule {
    double initial = 1.0;
    double final_value = 0.01;
    std::int64_t decay_steps = 10000;

    // Linear from initial to final over decay_steps, constant afterwards.
    [[nodiscard]] double value(std::int64_t step) const;
};

// Per-row argmax, ties to the lowest index.
std::vector<int> greedy_actions(const nn::Tensor& q);
// With probability epsilon every agent acts uniformly at random, otherwise greedily.
std::vector<int> select_actions(const nn::Tensor& q, double epsilon, Rng& rng);

using SnapshotPtr = std::shared_ptr<const Snapshot>;

struct JointTransition {
    SnapshotPtr state;
    std::vector<int> actions;
    double reward = 0.0;
    SnapshotPtr next;
};

struct LocalTransition {
    SnapshotPtr state;
    int node = 0;
    int action = 0;
    double reward = 0.0;
    SnapshotPtr next;
};

// y_k = r_k + gamma * sum_i Q_i^target(s'_k, argmax_a Q_i^online(s'_k, a)).
std::vector<double> compute_targets(std::span<const JointTransition* const> batch, QModel& online, QModel& target,
                                    double gamma);
// y_k = r_k + gamma * Q^target(s'_k, node_k, argmax_a Q^online(s'_k, node_k, a)).
std::vector<double> compute_local_targets(std::span<const LocalTransition* const> batch, QModel& online,
                                          QModel& target, double gamma);

struct LearnerConfig {
    double gamma = 0.0;
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t replay_capacity = 10000;
    double priority_alpha = 0.6;
    double beta_start = 0.4;
    double beta_end = 1.0;
    std::int64_t beta_anneal_steps = 20000;
    double priority_eps = 1e-6;
    std::int64_t target_period = 500;
};

struct TrainStepInfo {
    double loss = 0.0;
    std::vector<double> td_errors;
};

class Learner {
public:
    Learner(std::unique_ptr<QModel> online, LearnerConfig config);
    virtual ~Learner() = default;
    Learner(const Learner&) = delete;
    Learner& operator=(const Learner&) = delete;

    [[nodiscard]] QModel& model() { return *online_; }
    [[nodiscard]] QModel& target_model() { return *target_; }
    [[nodiscard]] const LearnerConfig& config() const { return config_; }
    [[nodiscard]] std::int64_t train_steps() const { return train_steps_; }

    std::vector<int> act(const Snapshot& s, double epsilon, Rng& rng);

    virtual void observe(const SnapshotPtr& state, std::span<const int> actions, double global_reward,
                         std::span<const double> agent_rewards, const SnapshotPtr& next) = 0;
    [[nodiscard]] virtual std::size_t replay_size() const = 0;
    // One gradient step; nullopt while the buffer holds fewer than batch_size entries.
    virtual std::optional<TrainStepInfo> train_step(Rng& replay_rng) = 0;

    // Target parameters become an exact copy of the online parameters.
    void sync_target();

protected:
    [[nodiscard]] double beta() const;
    void after_step();

    std::unique_ptr<QModel> online_;
    std::unique_ptr<QModel> target_;
    LearnerConfig config_;
    nn::Adam optimizer_;
    std::int64_t train_steps_ = 0;
};

// Graph Q-network learner: one transition per environment step with the team reward.
class GraphQLearner final : public Learner {
public:
    // use_team_reward=false trains on the mean of the per-agent local rewards.
    GraphQLearner(std::unique_ptr<QModel> online, LearnerConfig config, bool use_team_reward = true);

    void observe(const SnapshotPtr& state, std::span<const int> actions, double global_reward,
                 std::span<const double> agent_rewards, const SnapshotPtr& next) override;
    [[nodiscard]] std::size_t replay_size() const override { return replay_.size(); }
    std::optional<TrainStepInfo> train_step(Rng& replay_rng) override;

    // Mean squared decomposed TD error of the given transitions (no update).
    double loss_on(std::span<const JointTransition* const> batch, std::span<const double> weights);
    [[nodiscard]] const PrioritizedReplay<JointTransition>& replay() const { return replay_; }

private:
    PrioritizedReplay<JointTransition> replay_;
    bool team_reward_;
};

// Shared-weight per-cell learner: one transition per agent per environment step.
class LocalQLearner final : public Learner {
public:
    // use_team_reward=true gives every agent the global reward instead of its local one.
    LocalQLearner(std::unique_ptr<QModel> online, LearnerConfig config, bool use_team_reward = false);

    void observe(const SnapshotPtr& state, std::span<const int> actions, double global_reward,
                 std::span<const double> agent_rewards, const SnapshotPtr& next) override;
    [[nodiscard]] std::size_t replay_size() const override { return replay_.size(); }
    std::optional<TrainStepInfo> train_step(Rng& replay_rng) override;

private:
    PrioritizedReplay<LocalTransition> replay_;
    bool team_reward_;
};

} // namespace gqn
