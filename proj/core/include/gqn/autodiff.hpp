#pragma once

// Small reverse-mode differentiation kernel over dense 2-D tensors.
//
// A Tape records every operation of one forward pass; backward() walks the
// records in reverse and accumulates gradients into the Parameters that were
// read through Tape::param(). Tapes are single use.

#include <cstdint>
#include <deque>
#include <memory>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace gqn::nn {

using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
};

// Named parameters in insertion order. References returned by add()/at()
// stay valid for the lifetime of the set.
class ParameterSet {
public:
    Parameter& add(std::string name, Tensor init);
    [[nodiscard]] Parameter& at(std::string_view name);
    [[nodiscard]] const Parameter& at(std::string_view name) const;
    [[nodiscard]] bool contains(std::string_view name) const;

    [[nodiscard]] std::size_t size() const { return params_.size(); }
    [[nodiscard]] std::size_t scalar_count() const;
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    [[nodiscard]] auto begin() const { return params_.begin(); }
    [[nodiscard]] auto end() const { return params_.end(); }

    void zero_grad();
    // Copies values from a set with identical names and shapes.
    void copy_values_from(const ParameterSet& other);
    [[nodiscard]] bool same_layout(const ParameterSet& other) const;

private:
    std::deque<Parameter> params_;
};

// Compressed adjacency rows: the neighbors of node i are
// indices[offsets[i] .. offsets[i+1]).
struct Adjacency {
    std::vector<int> offsets{0};
    std::vector<int> indices;

    [[nodiscard]] std::size_t nodes() const { return offsets.size() - 1; }
    [[nodiscard]] std::span<const int> row(std::size_t i) const {
        return {indices.data() + offsets[i], indices.data() + offsets[i + 1]};
    }
    void append_row(std::span<const int> nbrs);
    // Same graph with each node added to its own row (first entry).
    [[nodiscard]] Adjacency with_self_loops() const;
};

enum class Activation { identity, relu };

class Tape;

// Handle to a recorded value.
struct Var {
    int id = -1;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var param(Parameter& p);

    [[nodiscard]] const Tensor& value(Var v) const;
    [[nodiscard]] const Tensor& grad(Var v) const;
    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

    // Keeps auxiliary data (adjacency, index lists) alive as long as the tape;
    // operations may hold references to it until backward() has run.
    template <typename T>
    const T& own(T value) {
        auto p = std::make_shared<const T>(std::move(value));
        const T& ref = *p;
        owned_.push_back(std::move(p));
        return ref;
    }

    // Seeds d(loss)/d(loss) = 1 for a 1x1 value and propagates to parameters.
    void backward(Var loss);

    // Low-level: record a node. backprop receives the tape and the node id and
    // must add into grads of its inputs via accumulate().
    using Backprop = std::function<void(Tape&, int)>;
    Var record(Tensor value, std::vector<int> inputs, Backprop backprop, const char* op);
    [[nodiscard]] bool needs_grad(Var v) const;
    void accumulate(int id, const Tensor& g);
    Tensor& grad_mut(int id);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Backprop backprop;
        Parameter* param = nullptr;
        bool needs_grad = false;
        bool has_grad = false;
    };
    std::vector<Node> nodes_;
    std::vector<std::shared_ptr<const void>> owned_;
    bool consumed_ = false;
};

// --- operations ---------------------------------------------------------------

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
Var add_row(Tape& t, Var x, Var row); // broadcast a 1 x d row over x
Var activate(Tape& t, Var x, Activation act);
Var relu(Tape& t, Var x);
Var leaky_relu(Tape& t, Var x, double slope);
// out_i = sum_{j in N(i)} x_j, or the mean when normalize is set (isolated rows stay zero).
Var neighbor_sum(Tape& t, Var x, const Adjacency& adj, bool normalize = false);
// Multi-head attention aggregation over the rows of adj (which should
// include self loops). z is n x (heads*width); a_src, a_dst are heads x width.
// Attention weights are written to attention_out when non-null, one entry per
// adjacency index and head (heads x nnz).
Var attention_aggregate(Tape& t, Var z, Var a_src, Var a_dst, const Adjacency& adj, int heads, double slope,
                        Tensor* attention_out = nullptr);
Var gather_rows(Tape& t, Var x, std::span<const int> rows);
// out_k = x[k, index[k]] as a column vector.
Var pick(Tape& t, Var x, std::span<const int> index);
// Column vector summed over contiguous row segments [offsets[b], offsets[b+1]).
Var segment_sum(Tape& t, Var column, std::span<const int> offsets);
// sum_k w_k (pred_k - target_k)^2 / B
Var weighted_mse(Tape& t, Var pred, const Tensor& target, const Tensor& weights);
Var sum_all(Tape& t, Var x);

} // namespace gqn::nn
