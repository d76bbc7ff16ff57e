#include <doctest.h>

#include <cmath>

#include "gqn/errors.hpp"
#include "gqn/layers.hpp"
#include "gqn/optim.hpp"

using namespace gqn;
using namespace gqn::nn;

TEST_CASE("adam: zero gradients leave parameters unchanged") {
    ParameterSet ps;
    auto& p = ps.add("p", glorot_init(3, 4, 1));
    const Tensor before = p.value;
    ps.zero_grad();
    Adam opt(AdamConfig{0.1});
    for (int k = 0; k < 5; ++k) opt.step(ps);
    CHECK(p.value == before);
    CHECK(opt.steps() == 5);
}

TEST_CASE("adam: first step moves each element by lr against the gradient sign") {
    ParameterSet ps;
    auto& p = ps.add("p", Tensor::Zero(1, 4));
    p.grad.resize(1, 4);
    p.grad << 3.0, -0.5, 1e-3, 0.0;
    Adam opt(AdamConfig{0.01});
    opt.step(ps);
    for (int j = 0; j < 4; ++j) {
        const double g = p.grad(0, j);
        const double expect = -0.01 * g / (std::abs(g) + 1e-8);
        CHECK(p.value(0, j) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("adam: two steps match a scalar hand recurrence") {
    ParameterSet ps;
    auto& p = ps.add("p", Tensor::Constant(1, 1, 0.5));
    Adam opt(AdamConfig{0.05, 0.9, 0.999, 1e-8});
    double x = 0.5, m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        const double g = 2.0 * x; // d/dx x^2
        p.grad = Tensor::Constant(1, 1, 2.0 * p.value(0, 0));
        opt.step(ps);
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        const double mh = m / (1.0 - std::pow(0.9, t));
        const double vh = v / (1.0 - std::pow(0.999, t));
        x -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
        CHECK(p.value(0, 0) == doctest::Approx(x).epsilon(1e-14));
    }
}

TEST_CASE("adam: identical runs are bit-identical") {
    const auto run = [] {
        ParameterSet ps;
        auto& p = ps.add("p", glorot_init(4, 4, 7));
        Adam opt(AdamConfig{0.01});
        for (int k = 0; k < 10; ++k) {
            p.grad = p.value.cwiseProduct(p.value) - Tensor::Ones(4, 4);
            opt.step(ps);
        }
        return p.value;
    };
    CHECK(run() == run());
}

TEST_CASE("adam rejects non-finite gradients") {
    ParameterSet ps;
    auto& p = ps.add("p", Tensor::Zero(1, 1));
    p.grad(0, 0) = std::nan("");
    Adam opt;
    CHECK_THROWS_AS(opt.step(ps), NumericalError);
}

TEST_CASE("parameter set bookkeeping") {
    ParameterSet ps;
    ps.add("a", Tensor::Zero(2, 3));
    ps.add("b", Tensor::Zero(1, 3));
    CHECK(ps.size() == 2);
    CHECK(ps.scalar_count() == 9);
    CHECK(ps.contains("a"));
    CHECK_FALSE(ps.contains("c"));
    CHECK_THROWS_AS(ps.add("a", Tensor::Zero(1, 1)), InvalidArgument);
    CHECK_THROWS_AS((void)ps.at("c"), InvalidArgument);
    CHECK(ps.begin()->name == "a");

    ParameterSet other;
    other.add("a", Tensor::Ones(2, 3));
    other.add("b", Tensor::Ones(1, 3));
    CHECK(ps.same_layout(other));
    ps.copy_values_from(other);
    CHECK(ps.at("a").value == Tensor::Ones(2, 3));

    ParameterSet wrong;
    wrong.add("a", Tensor::Ones(3, 2));
    wrong.add("b", Tensor::Ones(1, 3));
    CHECK_FALSE(ps.same_layout(wrong));
    CHECK_THROWS_AS(ps.copy_values_from(wrong), InvalidArgument);
}

TEST_CASE("layer shape errors") {
    ParameterSet ps;
    Rng rng(1);
    Dense d{"d", 3, 2, Activation::relu};
    d.init(ps, rng);
    Tape t;
    CHECK_THROWS_AS(d.forward(t, ps, t.constant(Tensor::Ones(4, 5))), InvalidArgument);

    GraphConv g{"g", 3, 2, Activation::relu};
    g.init(ps, rng);
    Adjacency two;
    two.append_row(std::vector<int>{1});
    two.append_row(std::vector<int>{0});
    CHECK_THROWS_AS(g.forward(t, ps, t.constant(Tensor::Ones(3, 3)), two), InvalidArgument);

    Tape t2;
    CHECK_THROWS_AS(pick(t2, t2.constant(Tensor::Ones(2, 3)), std::vector<int>{0, 3}), InvalidArgument);
    CHECK_THROWS_AS(segment_sum(t2, t2.constant(Tensor::Ones(3, 1)), std::vector<int>{0, 2}), InvalidArgument);
}

TEST_CASE("normalized neighbor aggregation averages and keeps isolated rows at zero") {
    Adjacency adj;
    adj.append_row(std::vector<int>{1, 2});
    adj.append_row(std::vector<int>{0});
    adj.append_row(std::vector<int>{0});
    adj.append_row(std::vector<int>{});
    Tensor x(4, 1);
    x << 1.0, 2.0, 4.0, 8.0;
    Tape t;
    const Tensor sum = t.value(neighbor_sum(t, t.constant(x), adj));
    const Tensor mean = t.value(neighbor_sum(t, t.constant(x), adj, true));
    CHECK(sum(0, 0) == 6.0);
    CHECK(mean(0, 0) == 3.0);
    CHECK(mean(1, 0) == 1.0);
    CHECK(sum(3, 0) == 0.0);
    CHECK(mean(3, 0) == 0.0);
}

TEST_CASE("self loops are prepended") {
    Adjacency adj;
    adj.append_row(std::vector<int>{1});
    adj.append_row(std::vector<int>{0});
    const auto closed = adj.with_self_loops();
    CHECK(closed.nodes() == 2);
    CHECK(closed.row(0)[0] == 0);
    CHECK(closed.row(0)[1] == 1);
    CHECK(closed.row(1)[0] == 1);
}
