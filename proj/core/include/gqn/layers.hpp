#pragma once

#include <cstdint>
#include <string>

#include "gqn/autodiff.hpp"
#include "gqn/rng.hpp"

namespace gqn::nn {

// Uniform in +-sqrt(6 / (rows + cols)).
Tensor glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Tensor glorot_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

// y = act(x W + b)
struct Dense {
    std::string name;
    int in = 0;
    int out = 0;
    Activation act = Activation::relu;

    void init(ParameterSet& params, Rng& rng) const;
    Var forward(Tape& t, ParameterSet& params, Var x) const;
};

// h_i = act(W1 x_i + W2 sum_{j in N(i)} x_j + b); mean instead of sum when normalized.
struct GraphConv {
    std::string name;
    int in = 0;
    int out = 0;
    Activation act = Activation::relu;
    bool normalized = false;

    void init(ParameterSet& params, Rng& rng) const;
    Var forward(Tape& t, ParameterSet& params, Var x, const Adjacency& adj) const;
};

// Multi-head graph attention; heads are concatenated so the output width is
// heads * width. Attention runs over the closed neighborhood (adjacency with
// self loops must be supplied).
struct GraphAttention {
    std::string name;
    int in = 0;
    int width = 32;
    int heads = 4;
    Activation act = Activation::relu;
    double slope = 0.2;

    [[nodiscard]] int out() const { return width * heads; }
    void init(ParameterSet& params, Rng& rng) const;
    Var forward(Tape& t, ParameterSet& params, Var x, const Adjacency& closed_adj,
                Tensor* attention_out = nullptr) const;
};

} // namespace gqn::nn
