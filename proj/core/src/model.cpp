#include "gqn/model.hpp"

#include <map>

#include <json.hpp>

#include "gqn/errors.hpp"

namespace gqn {

using nlohmann::json;

namespace {

const std::map<ModelKind, std::string>& kind_names() {
    static const std::map<ModelKind, std::string> names{
        {ModelKind::gqn_gcn, "gqn"}, {ModelKind::gqn_gat, "gqn_gat"}, {ModelKind::dqn, "dqn"},
        {ModelKind::ndqn, "ndqn"},   {ModelKind::gaq, "gaq"},
    };
    return names;
}

} // namespace

std::string to_string(ModelKind kind) {
    return kind_names().at(kind);
}

ModelKind parse_model_kind(const std::string& s) {
    for (const auto& [k, name] : kind_names()) {
        if (name == s) return k;
    }
    throw InvalidArgument("unknown model kind '" + s + "'");
}

std::string ModelSpec::to_json() const {
    json j{{"kind", to_string(kind)},
           {"obs_dim", obs_dim},
           {"n_actions", n_actions},
           {"encoder_width", encoder_width},
           {"gnn_width", gnn_width},
           {"gnn_layers", gnn_layers},
           {"heads", heads},
           {"decoder", decoder},
           {"normalized_gcn", normalized_gcn},
           {"mlp", mlp},
           {"stacked_neighbors", stacked_neighbors}};
    return j.dump();
}

ModelSpec ModelSpec::from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        ModelSpec s;
        s.kind = parse_model_kind(j.at("kind").get<std::string>());
        s.obs_dim = j.at("obs_dim").get<int>();
        s.n_actions = j.at("n_actions").get<int>();
        s.encoder_width = j.at("encoder_width").get<int>();
        s.gnn_width = j.at("gnn_width").get<int>();
        s.gnn_layers = j.at("gnn_layers").get<int>();
        s.heads = j.at("heads").get<int>();
        s.decoder = j.at("decoder").get<std::vector<int>>();
        s.normalized_gcn = j.at("normalized_gcn").get<bool>();
        s.mlp = j.at("mlp").get<std::vector<int>>();
        s.stacked_neighbors = j.at("stacked_neighbors").get<int>();
        return s;
    } catch (const json::exception& e) {
        throw CheckpointIncompatible(std::string("bad architecture descriptor: ") + e.what());
    }
}

ModelSpec default_spec(ModelKind kind, int obs_dim, int n_actions) {
    ModelSpec s;
    s.kind = kind;
    s.obs_dim = obs_dim;
    s.n_actions = n_actions;
    if (kind == ModelKind::gqn_gat) s.heads = 4;
    if (kind == ModelKind::gaq) s.heads = 6;
    return s;
}

Snapshot Snapshot::from_env(const env::NetworkEnv& e) {
    return Snapshot{nn::Tensor(e.state().features), e.agent_graph()};
}

GraphBatch GraphBatch::build(std::span<const Snapshot* const> snapshots) {
    GraphBatch b;
    Eigen::Index rows = 0;
    Eigen::Index cols = -1;
    for (const auto* s : snapshots) {
        if (!s->graph || s->graph->size() != s->nodes()) {
            throw InvalidArgument("snapshot graph and feature node counts differ");
        }
        if (cols >= 0 && s->features.cols() != cols) throw InvalidArgument("snapshots have different feature widths");
        cols = s->features.cols();
        rows += s->features.rows();
    }
    b.features.resize(rows, std::max<Eigen::Index>(cols, 0));
    Eigen::Index at = 0;
    std::vector<int> shifted;
    for (const auto* s : snapshots) {
        const int base = static_cast<int>(at);
        b.features.middleRows(at, s->features.rows()) = s->features;
        for (std::size_t i = 0; i < s->nodes(); ++i) {
            const auto& nb = s->graph->neighbors(i);
            shifted.resize(nb.size());
            for (std::size_t k = 0; k < nb.size(); ++k) shifted[k] = nb[k] + base;
            b.adjacency.append_row(shifted);
        }
        at += s->features.rows();
        b.offsets.push_back(static_cast<int>(at));
    }
    return b;
}

nn::Var QModel::q_all(nn::Tape& t, std::span<const Snapshot* const> snapshots) {
    std::vector<NodeRef> refs;
    for (const auto* s : snapshots) {
        for (std::size_t i = 0; i < s->nodes(); ++i) refs.push_back({s, static_cast<int>(i)});
    }
    return q_at(t, refs);
}

nn::Tensor QModel::q_values(const Snapshot& s) {
    nn::Tape t;
    const Snapshot* one[] = {&s};
    return t.value(q_all(t, one));
}

std::unique_ptr<QModel> QModel::clone() const {
    auto copy = make_model(spec_, 0);
    copy->params().copy_values_from(params_);
    return copy;
}

GraphQNetwork::GraphQNetwork(ModelSpec spec, std::uint64_t seed) : QModel(std::move(spec)) {
    if (spec_.kind != ModelKind::gqn_gcn && spec_.kind != ModelKind::gqn_gat) {
        throw InvalidArgument("GraphQNetwork needs a gqn model kind");
    }
    if (spec_.gnn_layers < 1 || spec_.obs_dim < 1 || spec_.n_actions < 1) throw InvalidArgument("bad GQN spec");
    Rng rng(seed);
    encoder_ = nn::Dense{"encoder", spec_.obs_dim, spec_.encoder_width, nn::Activation::relu};
    encoder_.init(params_, rng);

    int width = spec_.encoder_width;
    for (int l = 0; l < spec_.gnn_layers; ++l) {
        const std::string name = "gnn" + std::to_string(l);
        if (spec_.kind == ModelKind::gqn_gcn) {
            convs_.push_back({name, width, spec_.gnn_width, nn::Activation::relu, spec_.normalized_gcn});
            convs_.back().init(params_, rng);
            width = spec_.gnn_width;
        } else {
            attns_.push_back({name, width, spec_.gnn_width, spec_.heads, nn::Activation::relu, 0.2});
            attns_.back().init(params_, rng);
            width = attns_.back().out();
        }
    }
    for (std::size_t l = 0; l < spec_.decoder.size(); ++l) {
        decoder_.push_back({"decoder" + std::to_string(l), width, spec_.decoder[l], nn::Activation::relu});
        decoder_.back().init(params_, rng);
        width = spec_.decoder[l];
    }
    decoder_.push_back({"q_head", width, spec_.n_actions, nn::Activation::identity});
    decoder_.back().init(params_, rng);
}

nn::Var GraphQNetwork::forward(nn::Tape& t, const GraphBatch& batch) {
    if (batch.features.cols() != spec_.obs_dim) throw InvalidArgument("observation width does not match the model");
    auto h = encoder_.forward(t, params_, t.constant(batch.features));
    if (!convs_.empty()) {
        for (const auto& c : convs_) h = c.forward(t, params_, h, batch.adjacency);
    } else {
        const auto& closed = t.own(batch.adjacency.with_self_loops());
        for (const auto& a : attns_) h = a.forward(t, params_, h, closed);
    }
    for (const auto& d : decoder_) h = d.forward(t, params_, h);
    return h;
}

nn::Var GraphQNetwork::q_all(nn::Tape& t, std::span<const Snapshot* const> snapshots) {
    const auto& batch = t.own(GraphBatch::build(snapshots));
    return forward(t, batch);
}

nn::Var GraphQNetwork::q_at(nn::Tape& t, std::span<const NodeRef> nodes) {
    std::vector<const Snapshot*> unique;
    std::map<const Snapshot*, int> base;
    int rows = 0;
    for (const auto& r : nodes) {
        if (base.emplace(r.snapshot, rows).second) {
            unique.push_back(r.snapshot);
            rows += static_cast<int>(r.snapshot->nodes());
        }
    }
    auto all = q_all(t, unique);
    std::vector<int> idx;
    idx.reserve(nodes.size());
    for (const auto& r : nodes) idx.push_back(base.at(r.snapshot) + r.node);
    return nn::gather_rows(t, all, idx);
}

} // namespace gqn
