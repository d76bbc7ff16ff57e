#include "gqn/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gqn/errors.hpp"

namespace gqn {

// --- sum tree --------------------------------------------------------------------

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), leaves_(1) {
    while (leaves_ < std::max<std::size_t>(capacity, 1)) leaves_ *= 2;
    tree_.assign(2 * leaves_, 0.0);
}

void SumTree::set(std::size_t index, double value) {
    if (index >= capacity_) throw InvalidArgument("sum tree index out of range");
    std::size_t node = leaves_ + index;
    tree_[node] = value;
    for (node /= 2; node >= 1; node /= 2) tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
}

std::size_t SumTree::find(double mass) const {
    std::size_t node = 1;
    while (node < leaves_) {
        const double left = tree_[2 * node];
        if (mass < left || tree_[2 * node + 1] <= 0.0) {
            node = 2 * node;
        } else {
            mass -= left;
            node = 2 * node + 1;
        }
    }
    return std::min(node - leaves_, capacity_ - 1);
}

// --- action selection ------------------------------------------------------------

double EpsilonSchedule::value(std::int64_t step) const {
    if (decay_steps <= 0 || step >= decay_steps) return final_value;
    const double frac = static_cast<double>(std::max<std::int64_t>(step, 0)) / static_cast<double>(decay_steps);
    return initial + frac * (final_value - initial);
}

std::vector<int> greedy_actions(const nn::Tensor& q) {
    std::vector<int> a(static_cast<std::size_t>(q.rows()), 0);
    for (Eigen::Index r = 0; r < q.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < q.cols(); ++c) {
            if (q(r, c) > q(r, best)) best = c;
        }
        a[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return a;
}

std::vector<int> select_actions(const nn::Tensor& q, double epsilon, Rng& rng) {
    if (epsilon < 0.0 || epsilon > 1.0) throw InvalidArgument("epsilon must lie in [0, 1]");
    if (epsilon > 0.0 && uniform01(rng) < epsilon) {
        std::vector<int> a(static_cast<std::size_t>(q.rows()));
        const int hi = static_cast<int>(q.cols()) - 1;
        for (auto& x : a) x = uniform_int(rng, 0, hi);
        return a;
    }
    return greedy_actions(q);
}

// --- targets ---------------------------------------------------------------------

std::vector<double> compute_targets(std::span<const JointTransition* const> batch, QModel& online, QModel& target,
                                    double gamma) {
    std::vector<double> y(batch.size());
    // The bootstrap term vanishes; skip the two forward passes.
    if (gamma == 0.0) {
        for (std::size_t k = 0; k < batch.size(); ++k) y[k] = batch[k]->reward;
        return y;
    }
    std::vector<const Snapshot*> next;
    next.reserve(batch.size());
    for (const auto* tr : batch) next.push_back(tr->next.get());

    nn::Tape t_online;
    const nn::Tensor q_online = t_online.value(online.q_all(t_online, next));
    nn::Tape t_target;
    const nn::Tensor& q_target = t_target.value(target.q_all(t_target, next));
    const auto greedy = greedy_actions(q_online);

    Eigen::Index row = 0;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        double v = 0.0;
        for (std::size_t i = 0; i < next[k]->nodes(); ++i, ++row) {
            v += q_target(row, greedy[static_cast<std::size_t>(row)]);
        }
        y[k] = batch[k]->reward + gamma * v;
    }
    return y;
}

std::vector<double> compute_local_targets(std::span<const LocalTransition* const> batch, QModel& online,
                                          QModel& target, double gamma) {
    std::vector<double> y(batch.size());
    if (gamma == 0.0) {
        for (std::size_t k = 0; k < batch.size(); ++k) y[k] = batch[k]->reward;
        return y;
    }
    std::vector<NodeRef> refs;
    refs.reserve(batch.size());
    for (const auto* tr : batch) refs.push_back({tr->next.get(), tr->node});

    nn::Tape t_online;
    const auto greedy = greedy_actions(t_online.value(online.q_at(t_online, refs)));
    nn::Tape t_target;
    const nn::Tensor& q_target = t_target.value(target.q_at(t_target, refs));

    for (std::size_t k = 0; k < batch.size(); ++k) {
        y[k] = batch[k]->reward + gamma * q_target(static_cast<Eigen::Index>(k), greedy[k]);
    }
    return y;
}

// --- learner base ----------------------------------------------------------------

Learner::Learner(std::unique_ptr<QModel> online, LearnerConfig config)
    : online_(std::move(online)), config_(config), optimizer_(nn::AdamConfig{config.learning_rate}) {
    if (!online_) throw InvalidArgument("learner needs a model");
    if (config_.batch_size == 0) throw InvalidArgument("batch size must be positive");
    if (config_.target_period < 1) throw InvalidArgument("target period must be positive");
    target_ = online_->clone();
}

std::vector<int> Learner::act(const Snapshot& s, double epsilon, Rng& rng) {
    return select_actions(online_->q_values(s), epsilon, rng);
}

void Learner::sync_target() {
    target_->params().copy_values_from(online_->params());
}

double Learner::beta() const {
    if (config_.beta_anneal_steps <= 0) return config_.beta_end;
    const double frac = std::min(1.0, static_cast<double>(train_steps_) / static_cast<double>(config_.beta_anneal_steps));
    return config_.beta_start + frac * (config_.beta_end - config_.beta_start);
}

void Learner::after_step() {
    ++train_steps_;
    if (train_steps_ % config_.target_period == 0) sync_target();
}

namespace {

nn::Tensor column(std::span<const double> v) {
    nn::Tensor t(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t k = 0; k < v.size(); ++k) t(static_cast<Eigen::Index>(k), 0) = v[k];
    return t;
}

void check_loss(double loss) {
    if (!std::isfinite(loss)) throw NumericalError("training loss is not finite");
}

} // namespace

// --- graph Q learner -------------------------------------------------------------

GraphQLearner::GraphQLearner(std::unique_ptr<QModel> online, LearnerConfig config, bool use_team_reward)
    : Learner(std::move(online), config),
      replay_(config.replay_capacity, config.priority_alpha, config.priority_eps),
      team_reward_(use_team_reward) {}

void GraphQLearner::observe(const SnapshotPtr& state, std::span<const int> actions, double global_reward,
                            std::span<const double> agent_rewards, const SnapshotPtr& next) {
    if (actions.size() != state->nodes()) throw InvalidArgument("one action per agent required");
    double r = global_reward;
    if (!team_reward_) {
        r = std::accumulate(agent_rewards.begin(), agent_rewards.end(), 0.0) /
            static_cast<double>(agent_rewards.size());
    }
    replay_.add(JointTransition{state, std::vector<int>(actions.begin(), actions.end()), r, next});
}

double GraphQLearner::loss_on(std::span<const JointTransition* const> batch, std::span<const double> weights) {
    const auto y = compute_targets(batch, *online_, *target_, config_.gamma);
    std::vector<const Snapshot*> states;
    std::vector<int> actions;
    std::vector<int> offsets{0};
    for (const auto* tr : batch) {
        states.push_back(tr->state.get());
        actions.insert(actions.end(), tr->actions.begin(), tr->actions.end());
        offsets.push_back(offsets.back() + static_cast<int>(tr->actions.size()));
    }
    nn::Tape t;
    auto q = online_->q_all(t, states);
    auto joint = nn::segment_sum(t, nn::pick(t, q, actions), offsets);
    return t.value(nn::weighted_mse(t, joint, column(y), column(weights)))(0, 0);
}

std::optional<TrainStepInfo> GraphQLearner::train_step(Rng& replay_rng) {
    if (replay_.size() < config_.batch_size) return std::nullopt;
    const auto sample = replay_.sample(config_.batch_size, beta(), replay_rng);

    std::vector<const JointTransition*> batch;
    batch.reserve(sample.indices.size());
    for (auto i : sample.indices) batch.push_back(&replay_.at(i));
    const auto y = compute_targets(batch, *online_, *target_, config_.gamma);

    std::vector<const Snapshot*> states;
    std::vector<int> actions;
    std::vector<int> offsets{0};
    for (const auto* tr : batch) {
        states.push_back(tr->state.get());
        actions.insert(actions.end(), tr->actions.begin(), tr->actions.end());
        offsets.push_back(offsets.back() + static_cast<int>(tr->actions.size()));
    }

    nn::Tape t;
    auto q = online_->q_all(t, states);
    auto joint = nn::segment_sum(t, nn::pick(t, q, actions), offsets);
    auto loss = nn::weighted_mse(t, joint, column(y), column(sample.weights));

    TrainStepInfo info;
    info.loss = t.value(loss)(0, 0);
    check_loss(info.loss);
    online_->params().zero_grad();
    t.backward(loss);
    optimizer_.step(online_->params());

    const auto& pred = t.value(joint);
    info.td_errors.resize(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) info.td_errors[k] = pred(static_cast<Eigen::Index>(k), 0) - y[k];
    replay_.update_priorities(sample.indices, info.td_errors);
    after_step();
    return info;
}

// --- per-cell learner ------------------------------------------------------------

LocalQLearner::LocalQLearner(std::unique_ptr<QModel> online, LearnerConfig config, bool use_team_reward)
    : Learner(std::move(online), config),
      replay_(config.replay_capacity, config.priority_alpha, config.priority_eps),
      team_reward_(use_team_reward) {}

void LocalQLearner::observe(const SnapshotPtr& state, std::span<const int> actions, double global_reward,
                            std::span<const double> agent_rewards, const SnapshotPtr& next) {
    if (actions.size() != state->nodes() || agent_rewards.size() != actions.size()) {
        throw InvalidArgument("one action and one reward per agent required");
    }
    for (std::size_t i = 0; i < actions.size(); ++i) {
        replay_.add(LocalTransition{state, static_cast<int>(i), actions[i],
                                    team_reward_ ? global_reward : agent_rewards[i], next});
    }
}

std::optional<TrainStepInfo> LocalQLearner::train_step(Rng& replay_rng) {
    if (replay_.size() < config_.batch_size) return std::nullopt;
    const auto sample = replay_.sample(config_.batch_size, beta(), replay_rng);

    std::vector<const LocalTransition*> batch;
    std::vector<NodeRef> refs;
    std::vector<int> actions;
    for (auto i : sample.indices) {
        const auto& tr = replay_.at(i);
        batch.push_back(&tr);
        refs.push_back({tr.state.get(), tr.node});
        actions.push_back(tr.action);
    }
    const auto y = compute_local_targets(batch, *online_, *target_, config_.gamma);

    nn::Tape t;
    auto q = nn::pick(t, online_->q_at(t, refs), actions);
    auto loss = nn::weighted_mse(t, q, column(y), column(sample.weights));

    TrainStepInfo info;
    info.loss = t.value(loss)(0, 0);
    check_loss(info.loss);
    online_->params().zero_grad();
    t.backward(loss);
    optimizer_.step(online_->params());

    const auto& pred = t.value(q);
    info.td_errors.resize(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) info.td_errors[k] = pred(static_cast<Eigen::Index>(k), 0) - y[k];
    replay_.update_priorities(sample.indices, info.td_errors);
    after_step();
    return info;
}

} // namespace gqn
