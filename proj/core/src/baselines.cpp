#include "gqn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gqn/errors.hpp"

namespace gqn::baselines {

std::vector<double> ndqn_observation(const nn::Tensor& features, const env::NetworkGraph& graph, std::size_t cell,
                                     int max_neighbors) {
    const auto dim = static_cast<std::size_t>(features.cols());
    std::vector<double> out((1 + static_cast<std::size_t>(max_neighbors)) * dim, 0.0);
    const auto row = [&](std::size_t node, std::size_t slot) {
        for (std::size_t k = 0; k < dim; ++k) {
            out[slot * dim + k] = features(static_cast<Eigen::Index>(node), static_cast<Eigen::Index>(k));
        }
    };
    row(cell, 0);
    const auto nbrs = graph.neighbors_by_coupling(cell);
    const auto n = std::min<std::size_t>(nbrs.size(), static_cast<std::size_t>(max_neighbors));
    for (std::size_t k = 0; k < n; ++k) row(static_cast<std::size_t>(nbrs[k]), k + 1);
    return out;
}

LocalMlp::LocalMlp(ModelSpec spec, std::uint64_t seed) : QModel(std::move(spec)) {
    if (spec_.kind != ModelKind::dqn && spec_.kind != ModelKind::ndqn) throw InvalidArgument("LocalMlp needs dqn/ndqn");
    Rng rng(seed);
    int width = input_width();
    for (std::size_t l = 0; l < spec_.mlp.size(); ++l) {
        layers_.push_back({"fc" + std::to_string(l), width, spec_.mlp[l], nn::Activation::relu});
        layers_.back().init(params_, rng);
        width = spec_.mlp[l];
    }
    layers_.push_back({"q_head", width, spec_.n_actions, nn::Activation::identity});
    layers_.back().init(params_, rng);
}

int LocalMlp::input_width() const {
    return spec_.kind == ModelKind::ndqn ? spec_.obs_dim * (1 + spec_.stacked_neighbors) : spec_.obs_dim;
}

nn::Var LocalMlp::q_at(nn::Tape& t, std::span<const NodeRef> nodes) {
    nn::Tensor x(static_cast<Eigen::Index>(nodes.size()), input_width());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const auto& s = *nodes[k].snapshot;
        if (s.features.cols() != spec_.obs_dim) throw InvalidArgument("observation width does not match the model");
        const auto r = static_cast<Eigen::Index>(k);
        if (spec_.kind == ModelKind::ndqn) {
            const auto v = ndqn_observation(s.features, *s.graph, static_cast<std::size_t>(nodes[k].node),
                                            spec_.stacked_neighbors);
            x.row(r) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        } else {
            x.row(r) = s.features.row(nodes[k].node);
        }
    }
    auto h = t.constant(std::move(x));
    for (const auto& l : layers_) h = l.forward(t, params_, h);
    return h;
}

EgoNetwork ego_network(const env::NetworkGraph& graph, int center) {
    EgoNetwork ego;
    ego.nodes.push_back(center);
    for (int j : graph.neighbors(static_cast<std::size_t>(center))) ego.nodes.push_back(j);
    std::vector<int> row;
    for (std::size_t a = 0; a < ego.nodes.size(); ++a) {
        row.assign(1, static_cast<int>(a));
        for (std::size_t b = 0; b < ego.nodes.size(); ++b) {
            if (a != b && graph.adjacent(ego.nodes[a], ego.nodes[b])) row.push_back(static_cast<int>(b));
        }
        ego.closed.append_row(row);
    }
    return ego;
}

GraphAttentionQ::GraphAttentionQ(ModelSpec spec, std::uint64_t seed) : QModel(std::move(spec)) {
    if (spec_.kind != ModelKind::gaq) throw InvalidArgument("GraphAttentionQ needs the gaq kind");
    Rng rng(seed);
    int width = spec_.obs_dim;
    for (int l = 0; l < spec_.gnn_layers; ++l) {
        attns_.push_back({"gat" + std::to_string(l), width, spec_.gnn_width, spec_.heads, nn::Activation::relu, 0.2});
        attns_.back().init(params_, rng);
        width = attns_.back().out();
    }
    for (std::size_t l = 0; l < spec_.decoder.size(); ++l) {
        dense_.push_back({"fc" + std::to_string(l), width, spec_.decoder[l], nn::Activation::relu});
        dense_.back().init(params_, rng);
        width = spec_.decoder[l];
    }
    dense_.push_back({"q_head", width, spec_.n_actions, nn::Activation::identity});
    dense_.back().init(params_, rng);
}

nn::Var GraphAttentionQ::q_at(nn::Tape& t, std::span<const NodeRef> nodes) {
    // Union of ego networks, one per query.
    nn::Adjacency adj;
    std::vector<int> centers;
    Eigen::Index rows = 0;
    std::vector<EgoNetwork> egos;
    egos.reserve(nodes.size());
    for (const auto& r : nodes) {
        if (r.snapshot->features.cols() != spec_.obs_dim) {
            throw InvalidArgument("observation width does not match the model");
        }
        egos.push_back(ego_network(*r.snapshot->graph, r.node));
        rows += static_cast<Eigen::Index>(egos.back().nodes.size());
    }
    nn::Tensor x(rows, spec_.obs_dim);
    Eigen::Index at = 0;
    std::vector<int> shifted;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const auto& ego = egos[k];
        const int base = static_cast<int>(at);
        centers.push_back(base);
        for (std::size_t a = 0; a < ego.nodes.size(); ++a) {
            x.row(at + static_cast<Eigen::Index>(a)) = nodes[k].snapshot->features.row(ego.nodes[a]);
            const auto row = ego.closed.row(a);
            shifted.resize(row.size());
            for (std::size_t m = 0; m < row.size(); ++m) shifted[m] = row[m] + base;
            adj.append_row(shifted);
        }
        at += static_cast<Eigen::Index>(ego.nodes.size());
    }
    const auto& closed = t.own(std::move(adj));

    auto h = t.constant(std::move(x));
    for (const auto& a : attns_) h = a.forward(t, params_, h, closed);
    h = nn::gather_rows(t, h, centers);
    for (const auto& d : dense_) h = d.forward(t, params_, h);
    return h;
}

double heuristic_tilt(const radio::AntennaConfig& cell, const radio::Deployment& deployment) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const auto& s : deployment.sites) {
        const double d = radio::distance(s, cell.site_position);
        if (d > 1e-9) nearest = std::min(nearest, d);
    }
    if (!std::isfinite(nearest)) return kHeuristicFallbackTilt;
    const double deg = std::atan(cell.height_m / (0.5 * nearest)) * 180.0 / std::numbers::pi;
    return radio::clamp_tilt(std::round(deg));
}

std::vector<double> heuristic_tilts(const radio::Deployment& deployment) {
    std::vector<double> out;
    out.reserve(deployment.cells.size());
    for (const auto& c : deployment.cells) out.push_back(heuristic_tilt(c, deployment));
    return out;
}

} // namespace gqn::baselines

namespace gqn {

std::unique_ptr<QModel> make_model(const ModelSpec& spec, std::uint64_t seed) {
    switch (spec.kind) {
    case ModelKind::gqn_gcn:
    case ModelKind::gqn_gat: return std::make_unique<GraphQNetwork>(spec, seed);
    case ModelKind::dqn:
    case ModelKind::ndqn: return std::make_unique<baselines::LocalMlp>(spec, seed);
    case ModelKind::gaq: return std::make_unique<baselines::GraphAttentionQ>(spec, seed);
    }
    throw InvalidArgument("unknown model kind");
}

} // namespace gqn
