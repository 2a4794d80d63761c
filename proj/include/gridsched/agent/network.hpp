#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "gridsched/error.hpp"

namespace gridsched::agent {

/// Fully connected trunk with either a dueling head (value + advantages) or
/// a single Q head.
struct NetworkArch {
    int input_dim = 51;
    std::vector<int> hidden{128, 128, 128};
    int actions = 25;
    bool dueling = true;
    bool center_advantage = false;

    [[nodiscard]] int output_rows() const { return dueling ? actions + 1 : actions; }
    [[nodiscard]] int layer_count() const { return static_cast<int>(hidden.size()) + 1; }
    bool operator==(const NetworkArch&) const = default;
};

/// Weights and biases of every layer. The last layer of a dueling network
/// stacks the value row (row 0) on top of the advantage rows; both read the
/// same trunk output, so this is the two heads side by side.
template <class Scalar>
struct Parameters {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    std::vector<Matrix> weights; ///< out x in
    std::vector<Vector> biases;

    static Parameters zeros_like(const NetworkArch& arch) {
        Parameters p;
        int in = arch.input_dim;
        for (int l = 0; l < arch.layer_count(); ++l) {
            const int out = l + 1 < arch.layer_count() ? arch.hidden[static_cast<std::size_t>(l)] : arch.output_rows();
            p.weights.push_back(Matrix::Zero(out, in));
            p.biases.push_back(Vector::Zero(out));
            in = out;
        }
        return p;
    }

    /// Uniform fan-in initialization, U(-1/sqrt(in), 1/sqrt(in)).
    static Parameters initialize(const NetworkArch& arch, std::uint64_t seed) {
        auto p = zeros_like(arch);
        std::mt19937_64 rng(seed);
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(p.weights[l].cols()));
            std::uniform_real_distribution<double> u(-bound, bound);
            for (Eigen::Index j = 0; j < p.weights[l].cols(); ++j)
                for (Eigen::Index i = 0; i < p.weights[l].rows(); ++i) p.weights[l](i, j) = static_cast<Scalar>(u(rng));
            for (Eigen::Index i = 0; i < p.biases[l].size(); ++i) p.biases[l](i) = static_cast<Scalar>(u(rng));
        }
        return p;
    }

    [[nodiscard]] std::size_t size() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
        return n;
    }

    template <class Other>
    [[nodiscard]] Parameters<Other> cast() const {
        Parameters<Other> p;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            p.weights.push_back(weights[l].template cast<Other>());
            p.biases.push_back(biases[l].template cast<Other>());
        }
        return p;
    }
};

/// Activations kept for the backward pass. Columns are batch items.
template <class Scalar>
struct ForwardCache {
    using Matrix = typename Parameters<Scalar>::Matrix;
    std::vector<Matrix> activations; ///< input, then every hidden layer output
    Matrix head;                     ///< raw last-layer output
    Matrix q;                        ///< actions x batch
};

template <class Scalar>
using QMatrix = typename Parameters<Scalar>::Matrix;

/// Combines the head output into Q-values: V + A (optionally V + A - mean A)
/// for a dueling network, the head itself otherwise.
template <class Scalar>
QMatrix<Scalar> combine_head(const NetworkArch& arch, const QMatrix<Scalar>& head) {
    if (!arch.dueling) return head;
    QMatrix<Scalar> q = head.bottomRows(arch.actions);
    q.rowwise() += head.row(0);
    if (arch.center_advantage) q.rowwise() -= head.bottomRows(arch.actions).colwise().mean();
    return q;
}

template <class Scalar>
QMatrix<Scalar> forward(const NetworkArch& arch, const Parameters<Scalar>& p, const QMatrix<Scalar>& x,
                        ForwardCache<Scalar>* cache = nullptr) {
    if (x.rows() != arch.input_dim) throw InvalidArgument("network input has the wrong width");
    QMatrix<Scalar> h = x;
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(x);
    }
    const std::size_t last = p.weights.size() - 1;
    for (std::size_t l = 0; l < last; ++l) {
        QMatrix<Scalar> z = p.weights[l] * h;
        z.colwise() += p.biases[l];
        h = z.cwiseMax(Scalar(0));
        if (cache) cache->activations.push_back(h);
    }
    QMatrix<Scalar> head = p.weights[last] * h;
    head.colwise() += p.biases[last];
    QMatrix<Scalar> q = combine_head<Scalar>(arch, head);
    if (cache) {
        cache->head = head;
        cache->q = q;
    }
    return q;
}

/// Gradient of a loss with respect to every parameter, given dLoss/dQ.
template <class Scalar>
Parameters<Scalar> backward(const NetworkArch& arch, const Parameters<Scalar>& p, const ForwardCache<Scalar>& cache,
                            const QMatrix<Scalar>& dq) {
    QMatrix<Scalar> dhead;
    if (arch.dueling) {
        dhead.resize(arch.output_rows(), dq.cols());
        dhead.row(0) = dq.colwise().sum();
        if (arch.center_advantage) {
            const auto mean = dq.colwise().mean();
            dhead.bottomRows(arch.actions) = dq.rowwise() - mean;
        } else {
            dhead.bottomRows(arch.actions) = dq;
        }
    } else {
        dhead = dq;
    }
    Parameters<Scalar> g;
    g.weights.resize(p.weights.size());
    g.biases.resize(p.biases.size());
    QMatrix<Scalar> delta = dhead;
    for (std::size_t l = p.weights.size(); l-- > 0;) {
        const auto& a = cache.activations[l];
        g.weights[l] = delta * a.transpose();
        g.biases[l] = delta.rowwise().sum();
        if (l == 0) break;
        QMatrix<Scalar> back = p.weights[l].transpose() * delta;
        delta = (a.array() > Scalar(0)).select(back, Scalar(0));
    }
    return g;
}

/// Importance-weighted squared TD loss mean((w * (y - Q(s, a)))^2), its
/// gradient, and the per-item TD errors y - Q(s, a).
template <class Scalar>
struct LossResult {
    double loss = 0.0;
    Parameters<Scalar> gradient;
    std::vector<double> td_errors;
};

template <class Scalar>
LossResult<Scalar> weighted_td_loss(const NetworkArch& arch, const Parameters<Scalar>& p, const QMatrix<Scalar>& states,
                                    const std::vector<int>& actions, const std::vector<double>& targets,
                                    const std::vector<double>& weights) {
    const auto n = states.cols();
    if (static_cast<Eigen::Index>(actions.size()) != n || static_cast<Eigen::Index>(targets.size()) != n ||
        static_cast<Eigen::Index>(weights.size()) != n)
        throw InvalidArgument("batch component sizes differ");
    ForwardCache<Scalar> cache;
    forward<Scalar>(arch, p, states, &cache);
    QMatrix<Scalar> dq = QMatrix<Scalar>::Zero(arch.actions, n);
    LossResult<Scalar> r;
    r.td_errors.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double q = static_cast<double>(cache.q(actions[k], i));
        const double td = targets[k] - q;
        const double wtd = weights[k] * td;
        r.td_errors[k] = td;
        r.loss += wtd * wtd;
        dq(actions[k], i) = static_cast<Scalar>(-2.0 * weights[k] * wtd / static_cast<double>(n));
    }
    r.loss /= static_cast<double>(n);
    r.gradient = backward<Scalar>(arch, p, cache, dq);
    return r;
}

} // namespace gridsched::agent
