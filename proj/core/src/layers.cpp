#include "gqn/layers.hpp"

#include <cmath>

namespace gqn::nn {

Tensor glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Tensor t(rows, cols);
    if (t.size() == 0) return t;
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = uniform(rng, -limit, limit);
    return t;
}

Tensor glorot_init(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    Rng rng(seed);
    return glorot_init(rows, cols, rng);
}

void Dense::init(ParameterSet& params, Rng& rng) const {
    params.add(name + ".weight", glorot_init(in, out, rng));
    params.add(name + ".bias", Tensor::Zero(1, out));
}

Var Dense::forward(Tape& t, ParameterSet& params, Var x) const {
    auto w = t.param(params.at(name + ".weight"));
    auto b = t.param(params.at(name + ".bias"));
    return activate(t, add_row(t, matmul(t, x, w), b), act);
}

void GraphConv::init(ParameterSet& params, Rng& rng) const {
    params.add(name + ".root_weight", glorot_init(in, out, rng));
    params.add(name + ".neighbor_weight", glorot_init(in, out, rng));
    params.add(name + ".bias", Tensor::Zero(1, out));
}

Var GraphConv::forward(Tape& t, ParameterSet& params, Var x, const Adjacency& adj) const {
    auto w1 = t.param(params.at(name + ".root_weight"));
    auto w2 = t.param(params.at(name + ".neighbor_weight"));
    auto b = t.param(params.at(name + ".bias"));
    auto agg = neighbor_sum(t, x, adj, normalized);
    auto h = add(t, matmul(t, x, w1), matmul(t, agg, w2));
    return activate(t, add_row(t, h, b), act);
}

void GraphAttention::init(ParameterSet& params, Rng& rng) const {
    params.add(name + ".weight", glorot_init(in, out(), rng));
    params.add(name + ".att_src", glorot_init(heads, width, rng));
    params.add(name + ".att_dst", glorot_init(heads, width, rng));
    params.add(name + ".bias", Tensor::Zero(1, out()));
}

Var GraphAttention::forward(Tape& t, ParameterSet& params, Var x, const Adjacency& closed_adj,
                            Tensor* attention_out) const {
    auto w = t.param(params.at(name + ".weight"));
    auto a_src = t.param(params.at(name + ".att_src"));
    auto a_dst = t.param(params.at(name + ".att_dst"));
    auto b = t.param(params.at(name + ".bias"));
    auto z = matmul(t, x, w);
    auto h = attention_aggregate(t, z, a_src, a_dst, closed_adj, heads, slope, attention_out);
    return activate(t, add_row(t, h, b), act);
}

} // namespace gqn::nn
