#pragma once

// Proportional prioritized experience replay backed by a sum tree.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gqn/errors.hpp"
#include "gqn/rng.hpp"

namespace gqn {

class SumTree {
public:
    explicit SumTree(std::size_t capacity);

    void set(std::size_t index, double value);
    [[nodiscard]] double get(std::size_t index) const { return tree_[leaves_ + index]; }
    [[nodiscard]] double total() const { return tree_[1]; }
    // Leaf whose cumulative range contains mass, for mass in [0, total()).
    [[nodiscard]] std::size_t find(double mass) const;
    [[nodiscard]] std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::size_t leaves_;
    std::vector<double> tree_;
};

struct ReplaySample {
    std::vector<std::size_t> indices;
    std::vector<double> weights; // importance weights, max-normalized within the batch
};

template <typename T>
class PrioritizedReplay {
public:
    PrioritizedReplay(std::size_t capacity, double alpha, double priority_eps)
        : tree_(capacity), alpha_(alpha), eps_(priority_eps) {
        if (capacity == 0) throw InvalidArgument("replay capacity must be positive");
        items_.reserve(capacity);
    }

    // New entries get the current maximum priority so they are seen at least once.
    void add(T item) {
        std::size_t slot;
        if (items_.size() < tree_.capacity()) {
            slot = items_.size();
            items_.push_back(std::move(item));
            priorities_.push_back(max_priority_);
        } else {
            slot = next_;
            items_[slot] = std::move(item);
            priorities_[slot] = max_priority_;
        }
        tree_.set(slot, std::pow(max_priority_, alpha_));
        next_ = (slot + 1) % tree_.capacity();
    }

    [[nodiscard]] std::size_t size() const { return items_.size(); }
    [[nodiscard]] std::size_t capacity() const { return tree_.capacity(); }
    [[nodiscard]] const T& at(std::size_t i) const { return items_.at(i); }
    [[nodiscard]] double priority(std::size_t i) const { return priorities_.at(i); }
    [[nodiscard]] double probability(std::size_t i) const { return tree_.get(i) / tree_.total(); }
    [[nodiscard]] double alpha() const { return alpha_; }

    // Draws with replacement, P(i) = p_i^alpha / sum_j p_j^alpha.
    ReplaySample sample(std::size_t batch, double beta, Rng& rng) const {
        if (items_.empty()) throw InvalidState("sampling from an empty replay buffer");
        ReplaySample s;
        s.indices.resize(batch);
        s.weights.resize(batch);
        const double total = tree_.total();
        const double n = static_cast<double>(items_.size());
        double max_w = 0.0;
        for (std::size_t k = 0; k < batch; ++k) {
            const std::size_t i = std::min(tree_.find(uniform01(rng) * total), items_.size() - 1);
            s.indices[k] = i;
            s.weights[k] = std::pow(n * tree_.get(i) / total, -beta);
            max_w = std::max(max_w, s.weights[k]);
        }
        for (auto& w : s.weights) w /= max_w;
        return s;
    }

    // Priority becomes |td| + eps.
    void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors) {
        if (indices.size() != td_errors.size()) throw InvalidArgument("priority update size mismatch");
        for (std::size_t k = 0; k < indices.size(); ++k) {
            const double p = std::abs(td_errors[k]) + eps_;
            priorities_.at(indices[k]) = p;
            tree_.set(indices[k], std::pow(p, alpha_));
            max_priority_ = std::max(max_priority_, p);
        }
    }

private:
    SumTree tree_;
    std::vector<T> items_;
    std::vector<double> priorities_;
    double alpha_;
    double eps_;
    double max_priority_ = 1.0;
    std::size_t next_ = 0;
};

} // namespace gqn
