#pragma once

// Comparison policies: per-cell DQN, neighbor-stacking N-DQN, the per-cell
// graph-attention GAQ network, and the geometric tilt heuristic.

#include <cstdint>
#include <span>
#include <vector>

#include "gqn/env.hpp"
#include "gqn/model.hpp"

namespace gqn::baselines {

// Own features followed by up to max_neighbors neighbor blocks ordered by
// descending coupling, zero padded. Length = (1 + max_neighbors) * dim.
std::vector<double> ndqn_observation(const nn::Tensor& features, const env::NetworkGraph& graph, std::size_t cell,
                                     int max_neighbors = 5);

// Shared MLP applied to one node at a time (DQN), optionally on the stacked
// neighborhood observation (N-DQN).
class LocalMlp final : public QModel {
public:
    LocalMlp(ModelSpec spec, std::uint64_t seed);
    nn::Var q_at(nn::Tape& t, std::span<const NodeRef> nodes) override;

    [[nodiscard]] int input_width() const;

private:
    std::vector<nn::Dense> layers_;
};

// Two multi-head attention layers over each cell's ego network followed by
// a dense stack; the cell's own row gives its Q-vector.
class GraphAttentionQ final : public QModel {
public:
    GraphAttentionQ(ModelSpec spec, std::uint64_t seed);
    nn::Var q_at(nn::Tape& t, std::span<const NodeRef> nodes) override;

private:
    std::vector<nn::GraphAttention> attns_;
    std::vector<nn::Dense> dense_;
};

// Ego network of `center`: node list (center first) and closed adjacency
// restricted to those nodes, in local indices.
struct EgoNetwork {
    std::vector<int> nodes;
    nn::Adjacency closed;
};
EgoNetwork ego_network(const env::NetworkGraph& graph, int center);

inline constexpr double kHeuristicFallbackTilt = 6.0;

// Points the main beam at half the distance to the closest other site.
double heuristic_tilt(const radio::AntennaConfig& cell, const radio::Deployment& deployment);
std::vector<double> heuristic_tilts(const radio::Deployment& deployment);

} // namespace gqn::baselines
