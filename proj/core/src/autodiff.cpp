#include "gqn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "gqn/errors.hpp"

namespace gqn::nn {

// --- parameters ----------------------------------------------------------------

Parameter& ParameterSet::add(std::string name, Tensor init) {
    if (contains(name)) throw InvalidArgument("duplicate parameter name " + name);
    Parameter p;
    p.name = std::move(name);
    p.grad = Tensor::Zero(init.rows(), init.cols());
    p.adam_m = Tensor::Zero(init.rows(), init.cols());
    p.adam_v = Tensor::Zero(init.rows(), init.cols());
    p.value = std::move(init);
    params_.push_back(std::move(p));
    return params_.back();
}

Parameter& ParameterSet::at(std::string_view name) {
    for (auto& p : params_) {
        if (p.name == name) return p;
    }
    throw InvalidArgument(fmt::format("unknown parameter {}", name));
}

const Parameter& ParameterSet::at(std::string_view name) const {
    return const_cast<ParameterSet*>(this)->at(name);
}

bool ParameterSet::contains(std::string_view name) const {
    return std::any_of(params_.begin(), params_.end(), [&](const Parameter& p) { return p.name == name; });
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p.grad.setZero();
}

bool ParameterSet::same_layout(const ParameterSet& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        const auto& a = params_[i];
        const auto& b = other.params_[i];
        if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) return false;
    }
    return true;
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
    if (!same_layout(other)) throw InvalidArgument("parameter sets have different layouts");
    for (std::size_t i = 0; i < size(); ++i) params_[i].value = other.params_[i].value;
}

// --- adjacency -------------------------------------------------------------------

void Adjacency::append_row(std::span<const int> nbrs) {
    indices.insert(indices.end(), nbrs.begin(), nbrs.end());
    offsets.push_back(static_cast<int>(indices.size()));
}

Adjacency Adjacency::with_self_loops() const {
    Adjacency out;
    out.indices.reserve(indices.size() + nodes());
    for (std::size_t i = 0; i < nodes(); ++i) {
        out.indices.push_back(static_cast<int>(i));
        const auto r = row(i);
        out.indices.insert(out.indices.end(), r.begin(), r.end());
        out.offsets.push_back(static_cast<int>(out.indices.size()));
    }
    return out;
}

// --- tape ------------------------------------------------------------------------

Var Tape::constant(Tensor value) {
    return record(std::move(value), {}, nullptr, "constant");
}

Var Tape::param(Parameter& p) {
    Node n;
    n.value = p.value;
    n.param = &p;
    n.needs_grad = true;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

const Tensor& Tape::value(Var v) const {
    return nodes_.at(static_cast<std::size_t>(v.id)).value;
}

const Tensor& Tape::grad(Var v) const {
    const auto& n = nodes_.at(static_cast<std::size_t>(v.id));
    if (!n.has_grad) throw InvalidState("no gradient recorded for this value");
    return n.grad;
}

bool Tape::needs_grad(Var v) const {
    return nodes_[static_cast<std::size_t>(v.id)].needs_grad;
}

Var Tape::record(Tensor value, std::vector<int> inputs, Backprop backprop, const char* op) {
    if (!value.allFinite()) throw NumericalError(fmt::format("non-finite value produced by {}", op));
    Node n;
    n.value = std::move(value);
    n.needs_grad = std::any_of(inputs.begin(), inputs.end(),
                               [&](int i) { return nodes_[static_cast<std::size_t>(i)].needs_grad; });
    if (n.needs_grad) n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

Tensor& Tape::grad_mut(int id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad) {
        n.grad = Tensor::Zero(n.value.rows(), n.value.cols());
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::accumulate(int id, const Tensor& g) {
    if (!nodes_[static_cast<std::size_t>(id)].needs_grad) return;
    grad_mut(id) += g;
}

void Tape::backward(Var loss) {
    if (nodes_.empty() || loss.id < 0) throw InvalidState("backward() without a recorded forward pass");
    if (consumed_) throw InvalidState("backward() already ran on this tape");
    const auto& l = nodes_.at(static_cast<std::size_t>(loss.id)).value;
    if (l.rows() != 1 || l.cols() != 1) throw InvalidArgument("backward() needs a scalar loss");
    consumed_ = true;

    grad_mut(loss.id)(0, 0) = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        auto& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.has_grad || !n.needs_grad) continue;
        if (!n.grad.allFinite()) throw NumericalError("non-finite gradient during backward pass");
        if (n.param) {
            n.param->grad += n.grad;
        } else if (n.backprop) {
            n.backprop(*this, id);
        }
    }
}

// --- operations ------------------------------------------------------------------

namespace {

void require(bool cond, const char* what) {
    if (!cond) throw InvalidArgument(what);
}

} // namespace

Var matmul(Tape& t, Var a, Var b) {
    const auto& A = t.value(a);
    const auto& B = t.value(b);
    require(A.cols() == B.rows(), "matmul: inner dimensions differ");
    Tensor out = A * B;
    return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& tp, int self) {
        const Tensor& g = tp.grad_mut(self);
        if (tp.needs_grad(a)) tp.accumulate(a.id, g * tp.value(b).transpose());
        if (tp.needs_grad(b)) tp.accumulate(b.id, tp.value(a).transpose() * g);
    }, "matmul");
}

Var add(Tape& t, Var a, Var b) {
    const auto& A = t.value(a);
    const auto& B = t.value(b);
    require(A.rows() == B.rows() && A.cols() == B.cols(), "add: shapes differ");
    Tensor out = A + B;
    return t.record(std::move(out), {a.id, b.id}, [a, b](Tape& tp, int self) {
        const Tensor g = tp.grad_mut(self);
        tp.accumulate(a.id, g);
        tp.accumulate(b.id, g);
    }, "add");
}

Var add_row(Tape& t, Var x, Var row) {
    const auto& X = t.value(x);
    const auto& R = t.value(row);
    require(R.rows() == 1 && R.cols() == X.cols(), "add_row: bias must be 1 x cols");
    Tensor out = X.rowwise() + R.row(0);
    return t.record(std::move(out), {x.id, row.id}, [x, row](Tape& tp, int self) {
        const Tensor g = tp.grad_mut(self);
        tp.accumulate(x.id, g);
        if (tp.needs_grad(row)) tp.accumulate(row.id, g.colwise().sum());
    }, "add_row");
}

Var leaky_relu(Tape& t, Var x, double slope) {
    const auto& X = t.value(x);
    Tensor out = X.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
    return t.record(std::move(out), {x.id}, [x, slope](Tape& tp, int self) {
        const Tensor& g = tp.grad_mut(self);
        const Tensor& X = tp.value(x);
        Tensor d = g.binaryExpr(X, [slope](double gv, double xv) { return xv > 0.0 ? gv : slope * gv; });
        tp.accumulate(x.id, d);
    }, "leaky_relu");
}

Var relu(Tape& t, Var x) {
    return leaky_relu(t, x, 0.0);
}

Var activate(Tape& t, Var x, Activation act) {
    return act == Activation::relu ? relu(t, x) : x;
}

Var neighbor_sum(Tape& t, Var x, const Adjacency& adj, bool normalize) {
    const auto& X = t.value(x);
    require(static_cast<std::size_t>(X.rows()) == adj.nodes(), "neighbor_sum: adjacency size differs from rows");
    Tensor out = Tensor::Zero(X.rows(), X.cols());
    for (std::size_t i = 0; i < adj.nodes(); ++i) {
        const auto r = adj.row(i);
        if (r.empty()) continue;
        for (int j : r) out.row(static_cast<Eigen::Index>(i)) += X.row(j);
        if (normalize) out.row(static_cast<Eigen::Index>(i)) /= static_cast<double>(r.size());
    }
    return t.record(std::move(out), {x.id}, [x, &adj, normalize](Tape& tp, int self) {
        const Tensor& g = tp.grad_mut(self);
        Tensor d = Tensor::Zero(g.rows(), g.cols());
        for (std::size_t i = 0; i < adj.nodes(); ++i) {
            const auto r = adj.row(i);
            if (r.empty()) continue;
            const double scale = normalize ? 1.0 / static_cast<double>(r.size()) : 1.0;
            for (int j : r) d.row(j) += scale * g.row(static_cast<Eigen::Index>(i));
        }
        tp.accumulate(x.id, d);
    }, "neighbor_sum");
}

Var attention_aggregate(Tape& t, Var z, Var a_src, Var a_dst, const Adjacency& adj, int heads, double slope,
                        Tensor* attention_out) {
    const auto& Z = t.value(z);
    const auto& As = t.value(a_src);
    const auto& Ad = t.value(a_dst);
    require(heads >= 1, "attention: need at least one head");
    require(Z.cols() % heads == 0, "attention: feature width not divisible by heads");
    const auto width = Z.cols() / heads;
    require(As.rows() == heads && As.cols() == width && Ad.rows() == heads && Ad.cols() == width,
            "attention: attention vectors must be heads x width");
    require(static_cast<std::size_t>(Z.rows()) == adj.nodes(), "attention: adjacency size differs from rows");

    const auto n = Z.rows();
    const auto nnz = static_cast<Eigen::Index>(adj.indices.size());
    // s(h, i) = a_src_h . z_i^h, d(h, j) = a_dst_h . z_j^h
    Tensor s(heads, n), d(heads, n);
    for (int h = 0; h < heads; ++h) {
        const auto block = Z.middleCols(h * width, width);
        s.row(h) = (block * As.row(h).transpose()).transpose();
        d.row(h) = (block * Ad.row(h).transpose()).transpose();
    }
    Tensor pre(heads, nnz), alpha(heads, nnz);
    Tensor out = Tensor::Zero(n, Z.cols());
    for (int h = 0; h < heads; ++h) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const int b = adj.offsets[static_cast<std::size_t>(i)];
            const int e = adj.offsets[static_cast<std::size_t>(i) + 1];
            if (b == e) continue;
            double mx = -std::numeric_limits<double>::infinity();
            for (int k = b; k < e; ++k) {
                const double v = s(h, i) + d(h, adj.indices[static_cast<std::size_t>(k)]);
                pre(h, k) = v;
                mx = std::max(mx, v > 0.0 ? v : slope * v);
            }
            double denom = 0.0;
            for (int k = b; k < e; ++k) {
                const double v = pre(h, k);
                alpha(h, k) = std::exp((v > 0.0 ? v : slope * v) - mx);
                denom += alpha(h, k);
            }
            for (int k = b; k < e; ++k) {
                alpha(h, k) /= denom;
                out.block(i, h * width, 1, width) +=
                    alpha(h, k) * Z.block(adj.indices[static_cast<std::size_t>(k)], h * width, 1, width);
            }
        }
    }
    if (attention_out) *attention_out = alpha;

    return t.record(std::move(out), {z.id, a_src.id, a_dst.id},
                    [z, a_src, a_dst, &adj, heads, width, slope, pre = std::move(pre),
                     alpha = std::move(alpha)](Tape& tp, int self) {
        const Tensor& g = tp.grad_mut(self);
        const Tensor& Z = tp.value(z);
        const Tensor& As = tp.value(a_src);
        const Tensor& Ad = tp.value(a_dst);
        const auto n = Z.rows();
        Tensor dZ = Tensor::Zero(Z.rows(), Z.cols());
        Tensor dAs = Tensor::Zero(heads, width);
        Tensor dAd = Tensor::Zero(heads, width);
        std::vector<double> dalpha;
        for (int h = 0; h < heads; ++h) {
            Eigen::VectorXd ds = Eigen::VectorXd::Zero(n), dd = Eigen::VectorXd::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const int b = adj.offsets[static_cast<std::size_t>(i)];
                const int e = adj.offsets[static_cast<std::size_t>(i) + 1];
                if (b == e) continue;
                const auto gi = g.block(i, h * width, 1, width);
                dalpha.assign(static_cast<std::size_t>(e - b), 0.0);
                double weighted = 0.0;
                for (int k = b; k < e; ++k) {
                    const int j = adj.indices[static_cast<std::size_t>(k)];
                    const double da = gi.cwiseProduct(Z.block(j, h * width, 1, width)).sum();
                    dalpha[static_cast<std::size_t>(k - b)] = da;
                    weighted += alpha(h, k) * da;
                    dZ.block(j, h * width, 1, width) += alpha(h, k) * gi;
                }
                for (int k = b; k < e; ++k) {
                    const int j = adj.indices[static_cast<std::size_t>(k)];
                    const double de = alpha(h, k) * (dalpha[static_cast<std::size_t>(k - b)] - weighted);
                    const double dpre = pre(h, k) > 0.0 ? de : slope * de;
                    ds(i) += dpre;
                    dd(j) += dpre;
                }
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto zi = Z.block(i, h * width, 1, width);
                dZ.block(i, h * width, 1, width) += ds(i) * As.row(h) + dd(i) * Ad.row(h);
                dAs.row(h) += ds(i) * zi;
                dAd.row(h) += dd(i) * zi;
            }
        }
        tp.accumulate(z.id, dZ);
        if (tp.needs_grad(a_src)) tp.accumulate(a_src.id, dAs);
        if (tp.needs_grad(a_dst)) tp.accumulate(a_dst.id, dAd);
    }, "attention_aggregate");
}

Var gather_rows(Tape& t, Var x, std::span<const int> rows) {
    const auto& X = t.value(x);
    Tensor out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        require(rows[k] >= 0 && rows[k] < X.rows(), "gather_rows: index out of range");
        out.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
    }
    std::vector<int> idx(rows.begin(), rows.end());
    return t.record(std::move(out), {x.id}, [x, idx = std::move(idx)](Tape& tp, int self) {
        const Tensor& g = tp.grad_mut(self);
        const Tensor& X = tp.value(x);
        Tensor d = Tensor::Zero(X.rows(), X.cols());
        for (std::size_t k = 0; k < idx.size(); ++k) d.row(idx[k]) += g.row(static_cast<Eigen::Index>(k));
        tp.accumulate(x.id, d);
    }, "gather_rows");
}

Var pick(Tape& t, Var x, std::span<const int> index) {
    const auto& X = t.value(x);
    require(static_cast<Eigen::Index>(index.size()) == X.rows(), "pick: one index per row required");
    Tensor out(X.rows(), 1);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
        const int c = index[static_cast<std::size_t>(r)];
        require(c >= 0 && c < X.cols(), "pick: column out of range");
        out(r, 0) = X(r, c);
    }
    std::vector<int> idx(index.begin(), index.end());
    return t.record(std::move(out), {x.id}, [x, idx = std::move(idx)](Tape& tp, int self) {
        const Tensor& g = tp.grad_mut(self);
        const Tensor& X = tp.value(x);
        Tensor d = Tensor::Zero(X.rows(), X.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) d(static_cast<Eigen::Index>(r), idx[r]) = g(static_cast<Eigen::Index>(r), 0);
        tp.accumulate(x.id, d);
    }, "pick");
}

Var segment_sum(Tape& t, Var column, std::span<const int> offsets) {
    const auto& X = t.value(column);
    require(X.cols() == 1, "segment_sum: expects a column vector");
    require(!offsets.empty() && offsets.back() == X.rows(), "segment_sum: offsets must cover all rows");
    const auto segments = static_cast<Eigen::Index>(offsets.size() - 1);
    Tensor out = Tensor::Zero(segments, 1);
    for (Eigen::Index b = 0; b < segments; ++b) {
        for (int r = offsets[static_cast<std::size_t>(b)]; r < offsets[static_cast<std::size_t>(b) + 1]; ++r) {
            out(b, 0) += X(r, 0);
        }
    }
    std::vector<int> off(offsets.begin(), offsets.end());
    return t.record(std::move(out), {column.id}, [column, off = std::move(off)](Tape& tp, int self) {
        const Tensor& g = tp.grad_mut(self);
        Tensor d(off.back(), 1);
        for (std::size_t b = 0; b + 1 < off.size(); ++b) {
            for (int r = off[b]; r < off[b + 1]; ++r) d(r, 0) = g(static_cast<Eigen::Index>(b), 0);
        }
        tp.accumulate(column.id, d);
    }, "segment_sum");
}

Var weighted_mse(Tape& t, Var pred, const Tensor& target, const Tensor& weights) {
    const auto& P = t.value(pred);
    require(P.cols() == 1 && target.rows() == P.rows() && target.cols() == 1 && weights.rows() == P.rows() &&
                weights.cols() == 1,
            "weighted_mse: pred, target and weights must be matching columns");
    require(P.rows() > 0, "weighted_mse: empty batch");
    const double inv_b = 1.0 / static_cast<double>(P.rows());
    Tensor diff = P - target;
    Tensor out(1, 1);
    out(0, 0) = (weights.array() * diff.array().square()).sum() * inv_b;
    Tensor dpred = 2.0 * inv_b * (weights.array() * diff.array()).matrix();
    return t.record(std::move(out), {pred.id}, [pred, dpred = std::move(dpred)](Tape& tp, int self) {
        tp.accumulate(pred.id, tp.grad_mut(self)(0, 0) * dpred);
    }, "weighted_mse");
}

Var sum_all(Tape& t, Var x) {
    Tensor out(1, 1);
    out(0, 0) = t.value(x).sum();
    return t.record(std::move(out), {x.id}, [x](Tape& tp, int self) {
        const double g = tp.grad_mut(self)(0, 0);
        const Tensor& X = tp.value(x);
        tp.accumulate(x.id, Tensor::Constant(X.rows(), X.cols(), g));
    }, "sum_all");
}

} // namespace gqn::nn
