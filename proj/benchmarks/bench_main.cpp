#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "gqn/agent.hpp"
#include "gqn/env.hpp"
#include "gqn/model.hpp"
#include "gqn/platform.hpp"

using namespace gqn;

namespace {

env::ScenarioConfig scenario(int sites) {
    env::ScenarioConfig s;
    s.n_sites = sites;
    s.n_users = 500;
    return s;
}

void BM_EnvStep(benchmark::State& state) {
    env::NetworkEnv e(scenario(static_cast<int>(state.range(0))));
    e.reset(1);
    std::vector<int> actions(e.n_agents(), 1);
    Rng rng(3);
    for (auto _ : state) {
        for (auto& a : actions) a = static_cast<int>(rng() % 3);
        if (e.done()) e.reset(1);
        benchmark::DoNotOptimize(e.step(actions).reward);
    }
}
BENCHMARK(BM_EnvStep)->Arg(7)->Arg(19)->Unit(benchmark::kMicrosecond);

void BM_GqnForward(benchmark::State& state) {
    env::NetworkEnv e(scenario(static_cast<int>(state.range(0))));
    e.reset(1);
    const auto snap = Snapshot::from_env(e);
    auto model = make_model(default_spec(ModelKind::gqn_gcn, e.observation_dim(), e.actions_per_agent()), 7);
    for (auto _ : state) benchmark::DoNotOptimize(model->q_values(snap).data());
}
BENCHMARK(BM_GqnForward)->Arg(7)->Arg(19)->Arg(37)->Unit(benchmark::kMicrosecond);

void BM_GqnTrainStep(benchmark::State& state) {
    env::NetworkEnv e(scenario(7));
    LearnerConfig lc;
    lc.batch_size = static_cast<std::size_t>(state.range(0));
    GraphQLearner learner(make_model(default_spec(ModelKind::gqn_gcn, e.observation_dim(), e.actions_per_agent()), 7),
                          lc);
    Rng explore(1), replay_rng(2);
    e.reset(1);
    auto s = std::make_shared<const Snapshot>(Snapshot::from_env(e));
    for (std::size_t i = 0; i < lc.batch_size * 2; ++i) {
        if (e.done()) e.reset(i);
        const auto a = learner.act(*s, 1.0, explore);
        const auto r = e.step(a);
        auto next = std::make_shared<const Snapshot>(Snapshot::from_env(e));
        learner.observe(s, a, r.reward, r.agent_rewards, next);
        s = std::move(next);
    }
    for (auto _ : state) benchmark::DoNotOptimize(learner.train_step(replay_rng));
}
BENCHMARK(BM_GqnTrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

} // namespace

int main(int argc, char** argv) {
    configure_allocator();
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
