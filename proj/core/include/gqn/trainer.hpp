#pragma once

// Episode loop: epsilon-greedy interaction, replay, one gradient step per
// environment step, greedy evaluation and the geometric heuristic rollout.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gqn/agent.hpp"
#include "gqn/env.hpp"
#include "gqn/model.hpp"

namespace gqn::train {

struct TrainConfig {
    env::ScenarioConfig scenario;
    ModelKind algorithm = ModelKind::gqn_gcn;
    std::int64_t steps = 3000;
    std::uint64_t seed = 0;
    LearnerConfig learner;
    // Unset: algorithm default (1e-3 for every model).
    std::optional<double> learning_rate;
    // Unset: half of `steps`.
    std::optional<std::int64_t> epsilon_decay_steps;
    double epsilon_initial = 1.0;
    double epsilon_final = 0.01;
    // Unset: global for the graph Q-network, local for the per-cell baselines.
    std::optional<env::RewardScope> reward_scope;
    // Graph Q-networks only. With the plain neighbor sum and a random output
    // layer the per-cell action signal drowns in fitting the state value.
    bool gcn_mean_aggregation = true;
    bool zero_output_init = true;
};

double default_learning_rate(ModelKind kind);
env::RewardScope default_reward_scope(ModelKind kind);
bool is_graph_q(ModelKind kind);

EpsilonSchedule epsilon_schedule(const TrainConfig& cfg);
env::RewardScope effective_reward_scope(const TrainConfig& cfg);

// Deployment seed of training episode `episode`; independent of the algorithm.
std::uint64_t episode_seed(std::uint64_t seed, std::int64_t episode);
// Deployment seed of evaluation episode `episode`; disjoint from training seeds.
std::uint64_t eval_episode_seed(std::uint64_t seed, std::int64_t episode);

std::unique_ptr<Learner> make_learner(const TrainConfig& cfg, int obs_dim, int n_actions);

struct EpisodeRecord {
    std::int64_t step = 0; // environment steps completed at episode end
    std::int64_t episode = 0;
    double epsilon = 0.0;
    double loss = std::numeric_limits<double>::quiet_NaN(); // NaN when no update happened
    double reward_mean = 0.0;
    double global_sinr_db = 0.0; // at the final step
    double mean_power_w = 0.0;   // at the final step
    std::uint64_t seed = 0;
    std::string algorithm;
};

struct StepTrace {
    std::int64_t step = 0;
    double global_sinr_db = 0.0;
    double mean_power_w = 0.0;
    double reward = 0.0;
};

using EpisodeCallback = std::function<void(const EpisodeRecord&)>;
using StepCallback = std::function<void(const StepTrace&)>;

struct TrainResult {
    std::unique_ptr<Learner> learner;
    EpsilonSchedule schedule;
    std::int64_t env_steps = 0;
    std::vector<EpisodeRecord> episodes;
};

TrainResult run_training(const TrainConfig& cfg, const EpisodeCallback& on_episode = {},
                         const StepCallback& on_step = {});

struct RolloutResult {
    double global_sinr_db = 0.0; // at the final step
    double mean_power_w = 0.0;   // at the final step
    double reward_mean = 0.0;
};

// Greedy (epsilon = 0) episode of `model` starting from reset(episode_seed).
RolloutResult greedy_episode(QModel& model, env::NetworkEnv& e, std::uint64_t episode_seed);
// Heuristic tilts applied at reset and held for the episode.
RolloutResult heuristic_episode(env::NetworkEnv& e, std::uint64_t episode_seed);
// Action index that leaves every setting unchanged.
int noop_action(int actions_per_agent);

// Checkpoint with architecture, exploration schedule and step counters.
struct LoadedModel {
    std::unique_ptr<QModel> model;
    EpsilonSchedule schedule;
    std::int64_t train_steps = 0;
    std::int64_t env_steps = 0;
    std::string algorithm;
};

void save_trained(const std::filesystem::path& path, const QModel& model, const EpsilonSchedule& schedule,
                  std::int64_t train_steps, std::int64_t env_steps);
LoadedModel load_trained(const std::filesystem::path& path);

} // namespace gqn::train
