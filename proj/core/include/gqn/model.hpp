#pragma once

// Q-network models. Every model maps a (features, graph) snapshot to one
// Q-vector per node; they differ in how much of the graph a node sees.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gqn/autodiff.hpp"
#include "gqn/env.hpp"
#include "gqn/layers.hpp"

namespace gqn {

enum class ModelKind { gqn_gcn, gqn_gat, dqn, ndqn, gaq };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);

// Architecture descriptor, serialized into checkpoints.
struct ModelSpec {
    ModelKind kind = ModelKind::gqn_gcn;
    int obs_dim = env::kCellFeatures;
    int n_actions = 3;
    int encoder_width = 32;
    int gnn_width = 32;
    int gnn_layers = 2;
    int heads = 4;
    std::vector<int> decoder{32, 32};
    bool normalized_gcn = false;
    std::vector<int> mlp{64, 32};
    int stacked_neighbors = 5;

    [[nodiscard]] std::string to_json() const;
    static ModelSpec from_json(const std::string& text);
    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Default architecture for each algorithm.
ModelSpec default_spec(ModelKind kind, int obs_dim, int n_actions);

struct Snapshot {
    nn::Tensor features;
    std::shared_ptr<const env::NetworkGraph> graph;

    static Snapshot from_env(const env::NetworkEnv& e);
    [[nodiscard]] std::size_t nodes() const { return static_cast<std::size_t>(features.rows()); }
};

// Disjoint union of several snapshots; node rows are concatenated in order.
struct GraphBatch {
    nn::Tensor features;
    nn::Adjacency adjacency;
    std::vector<int> offsets{0};

    static GraphBatch build(std::span<const Snapshot* const> snapshots);
};

struct NodeRef {
    const Snapshot* snapshot = nullptr;
    int node = 0;
};

class QModel {
public:
    explicit QModel(ModelSpec spec) : spec_(std::move(spec)) {}
    virtual ~QModel() = default;
    QModel(const QModel&) = delete;
    QModel& operator=(const QModel&) = delete;

    [[nodiscard]] const ModelSpec& spec() const { return spec_; }
    [[nodiscard]] nn::ParameterSet& params() { return params_; }
    [[nodiscard]] const nn::ParameterSet& params() const { return params_; }

    // Q rows for every node of every snapshot, in batch order.
    virtual nn::Var q_all(nn::Tape& t, std::span<const Snapshot* const> snapshots);
    // Q rows for the listed nodes only.
    virtual nn::Var q_at(nn::Tape& t, std::span<const NodeRef> nodes) = 0;

    // Inference helper: n_nodes x n_actions.
    nn::Tensor q_values(const Snapshot& s);

    // Same architecture and parameter values (optimizer state not copied).
    [[nodiscard]] std::unique_ptr<QModel> clone() const;

protected:
    ModelSpec spec_;
    nn::ParameterSet params_;
};

// Encoder -> GNN stack -> decoder with shared weights across nodes. The joint
// value is the sum of the per-node outputs at the chosen actions.
class GraphQNetwork final : public QModel {
public:
    GraphQNetwork(ModelSpec spec, std::uint64_t seed);

    nn::Var q_all(nn::Tape& t, std::span<const Snapshot* const> snapshots) override;
    nn::Var q_at(nn::Tape& t, std::span<const NodeRef> nodes) override;

    // Forward over a prepared batch; the batch must outlive the tape.
    nn::Var forward(nn::Tape& t, const GraphBatch& batch);

private:
    nn::Dense encoder_;
    std::vector<nn::GraphConv> convs_;
    std::vector<nn::GraphAttention> attns_;
    std::vector<nn::Dense> decoder_;
};

std::unique_ptr<QModel> make_model(const ModelSpec& spec, std::uint64_t seed);

} // namespace gqn
