#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "gridsched/env/state.hpp"
#include "gridsched/error.hpp"

namespace gridsched::agent {

struct Transition {
    std::array<float, env::kStateDim> state{};
    int action = 0;
    float reward = 0.0f;
    std::array<float, env::kStateDim> next_state{};
    env::ActionMask next_mask{};
    bool terminal = false;
};

/// Binary tree whose internal nodes hold the sum (or max) of their children.
class SegmentTree {
public:
    explicit SegmentTree(std::size_t capacity, bool max_mode) : max_mode_(max_mode) {
        leaves_ = 1;
        while (leaves_ < capacity) leaves_ <<= 1;
        nodes_.assign(2 * leaves_, 0.0);
    }

    void set(std::size_t i, double value) {
        std::size_t k = i + leaves_;
        nodes_[k] = value;
        for (k >>= 1; k >= 1; k >>= 1)
            nodes_[k] = max_mode_ ? std::max(nodes_[2 * k], nodes_[2 * k + 1]) : nodes_[2 * k] + nodes_[2 * k + 1];
    }
    [[nodiscard]] double get(std::size_t i) const { return nodes_[i + leaves_]; }
    [[nodiscard]] double root() const { return nodes_[1]; }

    /// Smallest leaf index whose prefix sum exceeds `mass` (sum mode).
    [[nodiscard]] std::size_t find_prefix(double mass) const {
        std::size_t k = 1;
        while (k < leaves_) {
            if (mass < nodes_[2 * k] || nodes_[2 * k + 1] <= 0.0) {
                k = 2 * k;
            } else {
                mass -= nodes_[2 * k];
                k = 2 * k + 1;
            }
        }
        return k - leaves_;
    }

private:
    bool max_mode_;
    std::size_t leaves_;
    std::vector<double> nodes_;
};

struct ReplayConfig {
    std::size_t capacity = 10000;
    bool prioritized = true;
    double alpha = 0.95; ///< priority exponent
    double psi = 1e-3;   ///< priority floor
};

struct SampledBatch {
    std::vector<std::size_t> indices;
    std::vector<double> weights;       ///< importance weights, max 1
    std::vector<double> probabilities; ///< sampling probability of each item
};

/// Ring buffer with proportional prioritization. Without prioritization all
/// items are drawn uniformly and weigh 1.
class ReplayBuffer {
public:
    explicit ReplayBuffer(ReplayConfig cfg = {})
        : cfg_(cfg), sums_(std::max<std::size_t>(cfg.capacity, 1), false), maxes_(std::max<std::size_t>(cfg.capacity, 1), true) {
        if (cfg.capacity == 0) throw InvalidArgument("replay capacity must be positive");
        if (!(cfg.psi > 0.0)) throw InvalidArgument("priority floor must be positive");
        items_.reserve(cfg.capacity);
    }

    [[nodiscard]] std::size_t size() const { return items_.size(); }
    [[nodiscard]] std::size_t capacity() const { return cfg_.capacity; }
    [[nodiscard]] const Transition& at(std::size_t i) const { return items_[i]; }
    [[nodiscard]] const ReplayConfig& config() const { return cfg_; }

    /// Raw priority of item i (before the exponent).
    [[nodiscard]] double priority(std::size_t i) const { return maxes_.get(i); }

    /// New items take the current maximum priority (1 when empty). The
    /// oldest item is overwritten once full.
    std::size_t push(const Transition& t) {
        const double p = size() == 0 ? 1.0 : std::max(maxes_.root(), cfg_.psi);
        std::size_t slot;
        if (items_.size() < cfg_.capacity) {
            slot = items_.size();
            items_.push_back(t);
        } else {
            slot = next_;
            items_[slot] = t;
        }
        next_ = (slot + 1) % cfg_.capacity;
        set_priority(slot, p);
        return slot;
    }

    /// Probability of drawing item i.
    [[nodiscard]] double probability(std::size_t i) const {
        if (!cfg_.prioritized) return 1.0 / static_cast<double>(size());
        return sums_.get(i) / sums_.root();
    }

    /// Independent draws with replacement. Importance weight of each draw is
    /// (1 / (N P(i)))^beta, normalized by the largest weight in the batch.
    SampledBatch sample(std::size_t batch, double beta, std::mt19937_64& rng) const {
        if (size() == 0) throw InvalidArgument("cannot sample from an empty replay buffer");
        SampledBatch b;
        b.indices.resize(batch);
        b.weights.resize(batch);
        b.probabilities.resize(batch);
        const auto n = static_cast<double>(size());
        if (!cfg_.prioritized) {
            std::uniform_int_distribution<std::size_t> u(0, size() - 1);
            for (std::size_t k = 0; k < batch; ++k) {
                b.indices[k] = u(rng);
                b.probabilities[k] = 1.0 / n;
                b.weights[k] = 1.0;
            }
            return b;
        }
        std::uniform_real_distribution<double> u(0.0, sums_.root());
        double wmax = 0.0;
        for (std::size_t k = 0; k < batch; ++k) {
            std::size_t i = sums_.find_prefix(u(rng));
            if (i >= size()) i = size() - 1;
            b.indices[k] = i;
            b.probabilities[k] = probability(i);
            b.weights[k] = std::pow(1.0 / (n * b.probabilities[k]), beta);
            wmax = std::max(wmax, b.weights[k]);
        }
        for (auto& w : b.weights) w /= wmax;
        return b;
    }

    /// Priority from a fresh TD error: |delta| + psi.
    void update_priority(std::size_t i, double td_error) { set_priority(i, std::abs(td_error) + cfg_.psi); }

private:
    void set_priority(std::size_t i, double p) {
        maxes_.set(i, p);
        sums_.set(i, std::pow(p, cfg_.alpha));
    }

    ReplayConfig cfg_;
    std::vector<Transition> items_;
    std::size_t next_ = 0;
    SegmentTree sums_;
    SegmentTree maxes_;
};

} // namespace gridsched::agent
