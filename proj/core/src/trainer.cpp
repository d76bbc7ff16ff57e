#include "gqn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "gqn/baselines.hpp"
#include "gqn/checkpoint.hpp"
#include "gqn/errors.hpp"

namespace gqn::train {

using json = nlohmann::json;

bool is_graph_q(ModelKind kind) {
    return kind == ModelKind::gqn_gcn || kind == ModelKind::gqn_gat;
}

double default_learning_rate(ModelKind) {
    return 1e-3;
}

env::RewardScope default_reward_scope(ModelKind kind) {
    return is_graph_q(kind) ? env::RewardScope::global : env::RewardScope::local;
}

EpsilonSchedule epsilon_schedule(const TrainConfig& cfg) {
    EpsilonSchedule s;
    s.initial = cfg.epsilon_initial;
    s.final_value = cfg.epsilon_final;
    s.decay_steps = cfg.epsilon_decay_steps.value_or(cfg.steps / 2);
    return s;
}

env::RewardScope effective_reward_scope(const TrainConfig& cfg) {
    return cfg.reward_scope.value_or(default_reward_scope(cfg.algorithm));
}

std::uint64_t episode_seed(std::uint64_t seed, std::int64_t episode) {
    return derive_seed(seed, 4, static_cast<std::uint64_t>(episode));
}

std::uint64_t eval_episode_seed(std::uint64_t seed, std::int64_t episode) {
    return derive_seed(seed, 5, static_cast<std::uint64_t>(episode));
}

std::unique_ptr<Learner> make_learner(const TrainConfig& cfg, int obs_dim, int n_actions) {
    LearnerConfig lc = cfg.learner;
    lc.learning_rate = cfg.learning_rate.value_or(default_learning_rate(cfg.algorithm));
    lc.beta_anneal_steps = std::max<std::int64_t>(cfg.steps, 1);
    auto spec = default_spec(cfg.algorithm, obs_dim, n_actions);
    if (is_graph_q(cfg.algorithm)) spec.normalized_gcn = cfg.gcn_mean_aggregation;
    auto model = make_model(spec, derive_seed(cfg.seed, 1));
    const bool global = effective_reward_scope(cfg) == env::RewardScope::global;
    if (is_graph_q(cfg.algorithm)) {
        if (cfg.zero_output_init) {
            model->params().at("q_head.weight").value.setZero();
            model->params().at("q_head.bias").value.setZero();
        }
        return std::make_unique<GraphQLearner>(std::move(model), lc, global);
    }
    return std::make_unique<LocalQLearner>(std::move(model), lc, global);
}

TrainResult run_training(const TrainConfig& cfg, const EpisodeCallback& on_episode, const StepCallback& on_step) {
    if (cfg.steps < 0) throw InvalidArgument("steps must be non-negative");
    if (cfg.scenario.episode_length < 1) throw InvalidArgument("episode length must be positive");

    env::NetworkEnv e(cfg.scenario);
    TrainResult out;
    out.schedule = epsilon_schedule(cfg);
    out.learner = make_learner(cfg, e.observation_dim(), e.actions_per_agent());

    Rng explore(derive_seed(cfg.seed, 2));
    Rng replay_rng(derive_seed(cfg.seed, 3));
    const std::string name = to_string(cfg.algorithm);

    std::int64_t step = 0;
    for (std::int64_t episode = 0; step < cfg.steps; ++episode) {
        e.reset(episode_seed(cfg.seed, episode));
        auto state = std::make_shared<const Snapshot>(Snapshot::from_env(e));
        double reward_sum = 0.0, loss_sum = 0.0, eps = out.schedule.value(step);
        int n = 0, n_loss = 0;
        while (!e.done() && step < cfg.steps) {
            eps = out.schedule.value(step);
            const auto actions = out.learner->act(*state, eps, explore);
            const auto res = e.step(actions);
            auto next = std::make_shared<const Snapshot>(Snapshot::from_env(e));
            out.learner->observe(state, actions, res.reward, res.agent_rewards, next);
            if (auto info = out.learner->train_step(replay_rng)) {
                loss_sum += info->loss;
                ++n_loss;
            }
            reward_sum += res.reward;
            ++n;
            ++step;
            state = std::move(next);
            if (on_step) on_step({step, e.global_sinr_db(), e.mean_power_w(), res.reward});
        }
        EpisodeRecord rec;
        rec.step = step;
        rec.episode = episode;
        rec.epsilon = eps;
        if (n_loss > 0) rec.loss = loss_sum / n_loss;
        rec.reward_mean = reward_sum / n;
        rec.global_sinr_db = e.global_sinr_db();
        rec.mean_power_w = e.mean_power_w();
        rec.seed = cfg.seed;
        rec.algorithm = name;
        out.episodes.push_back(rec);
        if (on_episode) on_episode(rec);
    }
    out.env_steps = step;
    return out;
}

int noop_action(int actions_per_agent) {
    return actions_per_agent == 9 ? 4 : 1;
}

namespace {

RolloutResult finish(const env::NetworkEnv& e, double reward_sum, int n) {
    return {e.global_sinr_db(), e.mean_power_w(), n > 0 ? reward_sum / n : 0.0};
}

} // namespace

RolloutResult greedy_episode(QModel& model, env::NetworkEnv& e, std::uint64_t seed) {
    e.reset(seed);
    if (model.spec().obs_dim != e.observation_dim() || model.spec().n_actions != e.actions_per_agent()) {
        throw CheckpointIncompatible("model input/output widths do not match the scenario");
    }
    double reward_sum = 0.0;
    int n = 0;
    while (!e.done()) {
        const auto actions = greedy_actions(model.q_values(Snapshot::from_env(e)));
        reward_sum += e.step(actions).reward;
        ++n;
    }
    return finish(e, reward_sum, n);
}

RolloutResult heuristic_episode(env::NetworkEnv& e, std::uint64_t seed) {
    e.reset(seed);
    e.set_tilts(baselines::heuristic_tilts(e.deployment()));
    const std::vector<int> actions(e.n_agents(), noop_action(e.actions_per_agent()));
    double reward_sum = 0.0;
    int n = 0;
    while (!e.done()) {
        reward_sum += e.step(actions).reward;
        ++n;
    }
    return finish(e, reward_sum, n);
}

void save_trained(const std::filesystem::path& path, const QModel& model, const EpsilonSchedule& schedule,
                  std::int64_t train_steps, std::int64_t env_steps) {
    json d;
    d["algorithm"] = to_string(model.spec().kind);
    d["model"] = json::parse(model.spec().to_json());
    d["epsilon"] = {{"initial", schedule.initial}, {"final", schedule.final_value}, {"decay_steps", schedule.decay_steps}};
    d["train_steps"] = train_steps;
    d["env_steps"] = env_steps;
    nn::save_checkpoint(path, d.dump(), model.params());
}

LoadedModel load_trained(const std::filesystem::path& path) {
    auto ck = nn::load_checkpoint(path);
    LoadedModel out;
    try {
        const json d = json::parse(ck.descriptor);
        out.algorithm = d.at("algorithm").get<std::string>();
        const auto spec = ModelSpec::from_json(d.at("model").dump());
        const auto& eps = d.at("epsilon");
        out.schedule.initial = eps.at("initial").get<double>();
        out.schedule.final_value = eps.at("final").get<double>();
        out.schedule.decay_steps = eps.at("decay_steps").get<std::int64_t>();
        out.train_steps = d.at("train_steps").get<std::int64_t>();
        out.env_steps = d.at("env_steps").get<std::int64_t>();
        out.model = make_model(spec, 0);
    } catch (const json::exception& ex) {
        throw CheckpointIncompatible(std::string("bad checkpoint descriptor: ") + ex.what());
    }
    if (!out.model->params().same_layout(ck.params)) {
        throw CheckpointIncompatible("checkpoint parameters do not match the recorded architecture");
    }
    out.model->params().copy_values_from(ck.params);
    return out;
}

} // namespace gqn::train
