#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "gqn/replay.hpp"

using namespace gqn;

TEST_CASE("sum tree totals and lookup") {
    SumTree t(5);
    const double v[] = {1.0, 0.0, 2.5, 0.5, 3.0};
    for (std::size_t i = 0; i < 5; ++i) t.set(i, v[i]);
    CHECK(t.total() == doctest::Approx(7.0));
    CHECK(t.find(0.0) == 0);
    CHECK(t.find(0.999) == 0);
    CHECK(t.find(1.0) == 2);
    CHECK(t.find(3.49) == 2);
    CHECK(t.find(3.5) == 3);
    CHECK(t.find(4.0) == 4);
    CHECK(t.find(6.999) == 4);
    t.set(4, 0.0);
    CHECK(t.total() == doctest::Approx(4.0));
    CHECK(t.find(3.99) == 3);
    CHECK_THROWS_AS(t.set(5, 1.0), InvalidArgument);
}

TEST_CASE("sum tree matches a linear prefix scan") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    SumTree t(37);
    std::vector<double> v(37);
    for (int round = 0; round < 5; ++round) {
        for (std::size_t i = 0; i < v.size(); ++i) t.set(i, v[i] = u(rng));
        const double total = std::accumulate(v.begin(), v.end(), 0.0);
        CHECK(t.total() == doctest::Approx(total).epsilon(1e-12));
        for (int q = 0; q < 200; ++q) {
            const double mass = u(rng) / 2.0 * total;
            std::size_t expect = 0;
            double acc = v[0];
            while (acc <= mass && expect + 1 < v.size()) acc += v[++expect];
            CHECK(t.find(mass) == expect);
        }
    }
}

TEST_CASE("sampling frequencies follow priority^alpha") {
    PrioritizedReplay<int> buf(100, 0.6, 1e-6);
    for (int i = 0; i < 100; ++i) buf.add(i);
    std::vector<std::size_t> idx(100);
    std::vector<double> td(100);
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (std::size_t i = 0; i < 100; ++i) idx[i] = i, td[i] = u(gen);
    td[7] = 0.0;
    buf.update_priorities(idx, td);

    double z = 0.0;
    for (double e : td) z += std::pow(std::abs(e) + 1e-6, 0.6);
    std::vector<int> counts(100, 0);
    Rng rng(3);
    const int draws = 100000;
    for (int k = 0; k < draws / 50; ++k) {
        for (auto i : buf.sample(50, 0.4, rng).indices) ++counts[i];
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
        const double p = std::pow(std::abs(td[i]) + 1e-6, 0.6) / z;
        CHECK(buf.probability(i) == doctest::Approx(p).epsilon(1e-12));
        worst = std::max(worst, std::abs(counts[i] / static_cast<double>(draws) - p));
    }
    CHECK(worst <= 0.02);
}

TEST_CASE("new entries get the maximum priority and the ring overwrites oldest") {
    PrioritizedReplay<int> buf(3, 0.6, 1e-6);
    buf.add(10);
    CHECK(buf.priority(0) == 1.0);
    const std::size_t i0[] = {0};
    const double big[] = {4.0};
    buf.update_priorities(i0, big);
    buf.add(11);
    buf.add(12);
    CHECK(buf.priority(1) == doctest::Approx(4.0 + 1e-6));
    buf.add(13);
    CHECK(buf.size() == 3);
    CHECK(buf.at(0) == 13);
    CHECK(buf.at(1) == 11);
}

TEST_CASE("importance weights are max-normalized") {
    PrioritizedReplay<int> buf(4, 0.6, 1e-6);
    for (int i = 0; i < 4; ++i) buf.add(i);
    const std::size_t idx[] = {0, 1, 2, 3};
    const double td[] = {0.1, 1.0, 2.0, 4.0};
    buf.update_priorities(idx, td);
    Rng rng(4);
    const auto s = buf.sample(64, 0.5, rng);
    double mx = 0.0;
    for (std::size_t k = 0; k < s.indices.size(); ++k) {
        mx = std::max(mx, s.weights[k]);
        const double p = buf.probability(s.indices[k]);
        for (std::size_t m = 0; m < s.indices.size(); ++m) {
            const double pm = buf.probability(s.indices[m]);
            CHECK(s.weights[k] / s.weights[m] == doctest::Approx(std::pow(p / pm, -0.5)).epsilon(1e-9));
        }
    }
    CHECK(mx == 1.0);
}

TEST_CASE("replay errors") {
    CHECK_THROWS_AS(PrioritizedReplay<int>(0, 0.6, 1e-6), InvalidArgument);
    PrioritizedReplay<int> buf(2, 0.6, 1e-6);
    Rng rng(1);
    CHECK_THROWS_AS(buf.sample(1, 0.4, rng), InvalidState);
    buf.add(1);
    const std::size_t idx[] = {0};
    const double td[] = {0.1, 0.2};
    CHECK_THROWS_AS(buf.update_priorities(idx, td), InvalidArgument);
}
