#include <doctest.h>

#include <cmath>
#include <random>

#include "gqn/agent.hpp"
#include "gqn/errors.hpp"

using namespace gqn;
using nn::Tensor;

namespace {

SnapshotPtr random_snapshot(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution e(0.5);
    auto s = std::make_shared<Snapshot>();
    s->features.resize(n, env::kCellFeatures);
    for (Eigen::Index i = 0; i < s->features.size(); ++i) s->features.data()[i] = u(rng);
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (e(rng)) edges.emplace_back(i, j);
        }
    }
    s->graph = std::make_shared<const env::NetworkGraph>(
        env::NetworkGraph::from_edges(static_cast<std::size_t>(n), edges));
    return s;
}

// All joint actions of n agents with k actions each, as digit vectors.
std::vector<std::vector<int>> joint_actions(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> a(static_cast<std::size_t>(n), 0);
    while (true) {
        out.push_back(a);
        int i = 0;
        while (i < n && ++a[static_cast<std::size_t>(i)] == k) a[static_cast<std::size_t>(i++)] = 0;
        if (i == n) break;
    }
    return out;
}

double joint_value(const Tensor& q, const std::vector<int>& a) {
    double v = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) v += q(static_cast<Eigen::Index>(i), a[i]);
    return v;
}

double brute_force_max(const Tensor& q) {
    double best = -INFINITY;
    for (const auto& a : joint_actions(static_cast<int>(q.rows()), static_cast<int>(q.cols()))) {
        best = std::max(best, joint_value(q, a));
    }
    return best;
}

LearnerConfig small_config() {
    LearnerConfig c;
    c.batch_size = 4;
    c.replay_capacity = 100;
    c.target_period = 3;
    return c;
}

} // namespace

TEST_CASE("greedy ties go to the lowest index") {
    Tensor q(2, 3);
    q << 1, 5, 2, 3, 3, 0;
    CHECK(greedy_actions(q) == std::vector<int>{1, 0});
    Rng rng(1);
    CHECK(select_actions(q, 0.0, rng) == std::vector<int>{1, 0});
}

TEST_CASE("per-agent argmax equals the exhaustive joint argmax") {
    std::mt19937_64 rng(2);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 4;
        const int k = trial % 2 ? 9 : 3;
        auto m = make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, k), static_cast<std::uint64_t>(trial));
        const auto s = random_snapshot(n, rng);
        const Tensor q = m->q_values(*s);
        const auto greedy = greedy_actions(q);
        std::vector<int> best;
        double best_v = -INFINITY;
        for (const auto& a : joint_actions(n, k)) {
            const double v = joint_value(q, a);
            if (v > best_v) best_v = v, best = a;
        }
        if (best != greedy) ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("epsilon one gives uniform per-agent marginals") {
    Rng rng(3);
    const Tensor q = Tensor::Zero(3, 3);
    int counts[3][3] = {};
    const int draws = 10000;
    for (int d = 0; d < draws; ++d) {
        const auto a = select_actions(q, 1.0, rng);
        for (int i = 0; i < 3; ++i) ++counts[i][a[static_cast<std::size_t>(i)]];
    }
    // Chi-square with 2 degrees of freedom, 0.1% upper quantile.
    const double critical = 13.815510557964274;
    for (auto& agent : counts) {
        double chi2 = 0.0;
        for (int c : agent) chi2 += std::pow(c - draws / 3.0, 2) / (draws / 3.0);
        CHECK(chi2 < critical);
    }
}

TEST_CASE("epsilon outside [0, 1] is rejected") {
    Rng rng(4);
    const Tensor q = Tensor::Zero(2, 3);
    CHECK_THROWS_AS(select_actions(q, -0.1, rng), InvalidArgument);
    CHECK_THROWS_AS(select_actions(q, 1.5, rng), InvalidArgument);
}

TEST_CASE("epsilon schedule is linear then constant") {
    EpsilonSchedule s{1.0, 0.01, 100};
    CHECK(s.value(0) == 1.0);
    CHECK(s.value(50) == doctest::Approx(0.505));
    CHECK(s.value(100) == 0.01);
    CHECK(s.value(5000) == 0.01);
    EpsilonSchedule none{1.0, 0.01, 0};
    CHECK(none.value(0) == 0.01);
}

TEST_CASE("gamma zero targets equal rewards bit-exactly") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    auto online = make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, 3), 1);
    auto target = make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, 3), 2);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<JointTransition> items;
        for (int k = 0; k < 16; ++k) {
            auto s = random_snapshot(1 + k % 5, rng);
            items.push_back({s, std::vector<int>(s->nodes(), 0), n(rng) * std::pow(10.0, k % 7 - 3), random_snapshot(1 + k % 5, rng)});
        }
        items[0].reward = 0.37;
        std::vector<const JointTransition*> batch;
        for (const auto& tr : items) batch.push_back(&tr);
        const auto y = compute_targets(batch, *online, *target, 0.0);
        for (std::size_t k = 0; k < y.size(); ++k) CHECK(y[k] == items[k].reward);

        std::vector<LocalTransition> local;
        for (const auto& tr : items) local.push_back({tr.state, 0, 1, tr.reward, tr.next});
        std::vector<const LocalTransition*> lb;
        for (const auto& tr : local) lb.push_back(&tr);
        const auto yl = compute_local_targets(lb, *online, *target, 0.0);
        for (std::size_t k = 0; k < yl.size(); ++k) CHECK(yl[k] == local[k].reward);
    }
}

TEST_CASE("gamma 0.9 with a cloned target equals the brute-force joint max") {
    std::mt19937_64 rng(6);
    auto online = make_model(default_spec(ModelKind::gqn_gat, env::kCellFeatures, 3), 7);
    auto target = online->clone();
    std::vector<JointTransition> items;
    for (int k = 0; k < 6; ++k) {
        auto s = random_snapshot(1 + k % 3, rng);
        items.push_back({s, std::vector<int>(s->nodes(), 1), 0.1 * k, random_snapshot(1 + k % 3, rng)});
    }
    std::vector<const JointTransition*> batch;
    for (const auto& tr : items) batch.push_back(&tr);
    const auto y = compute_targets(batch, *online, *target, 0.9);
    for (std::size_t k = 0; k < items.size(); ++k) {
        const double expect = items[k].reward + 0.9 * brute_force_max(online->q_values(*items[k].next));
        CHECK(y[k] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("double Q: online picks the action, target evaluates it") {
    std::mt19937_64 rng(8);
    auto online = make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, 3), 1);
    auto target = make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, 3), 9);
    auto s = random_snapshot(3, rng), next = random_snapshot(3, rng);
    const JointTransition tr{s, {0, 0, 0}, 0.25, next};
    const JointTransition* batch[] = {&tr};
    const auto greedy = greedy_actions(online->q_values(*next));
    const double expect = 0.25 + 0.5 * joint_value(target->q_values(*next), greedy);
    CHECK(compute_targets(batch, *online, *target, 0.5)[0] == doctest::Approx(expect).epsilon(1e-12));

    const LocalTransition lt{s, 2, 0, -0.5, next};
    const LocalTransition* lb[] = {&lt};
    const double expect_local = -0.5 + 0.5 * target->q_values(*next)(2, greedy[2]);
    CHECK(compute_local_targets(lb, *online, *target, 0.5)[0] == doctest::Approx(expect_local).epsilon(1e-12));
}

TEST_CASE("single-sample loss is the squared TD error") {
    std::mt19937_64 rng(10);
    GraphQLearner learner(make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, 3), 3), small_config());
    auto s = random_snapshot(4, rng);
    const JointTransition tr{s, {2, 0, 1, 1}, 0.3, random_snapshot(4, rng)};
    const JointTransition* batch[] = {&tr};
    const double w[] = {1.0};
    const double pred = joint_value(learner.model().q_values(*s), tr.actions);
    CHECK(learner.loss_on(batch, w) == doctest::Approx(std::pow(pred - 0.3, 2)).epsilon(1e-12));
}

TEST_CASE("predictions equal to targets give zero loss") {
    std::mt19937_64 rng(11);
    GraphQLearner learner(make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, 3), 3), small_config());
    auto s = random_snapshot(3, rng);
    const std::vector<int> a{0, 1, 2};
    const JointTransition tr{s, a, joint_value(learner.model().q_values(*s), a), random_snapshot(3, rng)};
    const JointTransition* batch[] = {&tr};
    const double w[] = {1.0};
    CHECK(learner.loss_on(batch, w) == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("training waits for a full batch, then syncs the target on schedule") {
    std::mt19937_64 rng(12);
    GraphQLearner learner(make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, 3), 3), small_config());
    Rng replay(1);
    const auto probe = random_snapshot(5, rng);
    for (int k = 0; k < 3; ++k) {
        auto s = random_snapshot(4, rng);
        learner.observe(s, std::vector<int>{0, 1, 2, 1}, 0.1 * k, std::vector<double>(4, 0.0), random_snapshot(4, rng));
        CHECK_FALSE(learner.train_step(replay).has_value());
    }
    auto s = random_snapshot(4, rng);
    learner.observe(s, std::vector<int>{0, 1, 2, 1}, 0.5, std::vector<double>(4, 0.0), random_snapshot(4, rng));
    CHECK(learner.replay_size() == 4);

    const Tensor frozen = learner.target_model().q_values(*probe);
    CHECK(frozen == learner.model().q_values(*probe));
    for (int k = 1; k <= 6; ++k) {
        const auto info = learner.train_step(replay);
        REQUIRE(info.has_value());
        CHECK(std::isfinite(info->loss));
        CHECK(info->td_errors.size() == 4);
        CHECK(learner.train_steps() == k);
        if (k % 3 == 0) {
            CHECK(learner.target_model().q_values(*probe) == learner.model().q_values(*probe));
        } else {
            CHECK_FALSE(learner.target_model().q_values(*probe) == learner.model().q_values(*probe));
        }
        if (k == 1) CHECK(learner.target_model().q_values(*probe) == frozen);
    }
}

TEST_CASE("team reward switch for the graph learner") {
    std::mt19937_64 rng(13);
    auto cfg = small_config();
    cfg.batch_size = 1;
    GraphQLearner local(make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, 3), 3), cfg, false);
    auto s = random_snapshot(2, rng);
    local.observe(s, std::vector<int>{0, 1}, 9.0, std::vector<double>{0.2, 0.4}, random_snapshot(2, rng));
    CHECK(local.replay().at(0).reward == doctest::Approx(0.3));
    GraphQLearner team(make_model(default_spec(ModelKind::gqn_gcn, env::kCellFeatures, 3), 3), cfg);
    team.observe(s, std::vector<int>{0, 1}, 9.0, std::vector<double>{0.2, 0.4}, random_snapshot(2, rng));
    CHECK(team.replay().at(0).reward == 9.0);
    CHECK_THROWS_AS(team.observe(s, std::vector<int>{0}, 0.0, std::vector<double>{0.0}, s), InvalidArgument);
}

TEST_CASE("local learner stores one transition per agent") {
    std::mt19937_64 rng(14);
    auto cfg = small_config();
    LocalQLearner learner(make_model(default_spec(ModelKind::dqn, env::kCellFeatures, 3), 3), cfg);
    auto s = random_snapshot(3, rng);
    learner.observe(s, std::vector<int>{0, 1, 2}, 0.0, std::vector<double>{0.1, 0.2, 0.3}, random_snapshot(3, rng));
    CHECK(learner.replay_size() == 3);
    Rng replay(2);
    CHECK_FALSE(learner.train_step(replay).has_value());
    learner.observe(s, std::vector<int>{0, 1, 2}, 0.0, std::vector<double>{0.1, 0.2, 0.3}, random_snapshot(3, rng));
    const auto info = learner.train_step(replay);
    REQUIRE(info.has_value());
    CHECK(info->td_errors.size() == 4);
    CHECK_THROWS_AS(learner.observe(s, std::vector<int>{0, 1, 2}, 0.0, std::vector<double>{0.1}, s), InvalidArgument);
}

TEST_CASE("learner configuration is validated") {
    auto cfg = small_config();
    cfg.batch_size = 0;
    CHECK_THROWS_AS(GraphQLearner(make_model(default_spec(ModelKind::gqn_gcn, 9, 3), 1), cfg), InvalidArgument);
    cfg = small_config();
    cfg.target_period = 0;
    CHECK_THROWS_AS(GraphQLearner(make_model(default_spec(ModelKind::gqn_gcn, 9, 3), 1), cfg), InvalidArgument);
}
