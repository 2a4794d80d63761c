#pragma once

#include <cmath>

#include "gridsched/agent/network.hpp"

namespace gridsched::agent {

struct AdamConfig {
    double learning_rate = 2.5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <class Scalar>
struct AdamState {
    Parameters<Scalar> m;
    Parameters<Scalar> v;
    long long step = 0;

    static AdamState zeros_like(const NetworkArch& arch) {
        return {Parameters<Scalar>::zeros_like(arch), Parameters<Scalar>::zeros_like(arch), 0};
    }
};

template <class Scalar>
void adam_update(Parameters<Scalar>& p, const Parameters<Scalar>& g, AdamState<Scalar>& s, const AdamConfig& cfg) {
    ++s.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.step));
    const auto b1 = static_cast<Scalar>(cfg.beta1), b2 = static_cast<Scalar>(cfg.beta2);
    const auto lr = static_cast<Scalar>(cfg.learning_rate * std::sqrt(c2) / c1);
    const auto eps = static_cast<Scalar>(cfg.epsilon * std::sqrt(c2));
    auto apply = [&](auto& param, const auto& grad, auto& m, auto& v) {
        m = b1 * m + (Scalar(1) - b1) * grad;
        v = b2 * v + (Scalar(1) - b2) * grad.cwiseAbs2();
        param.array() -= lr * m.array() / (v.array().sqrt() + eps);
    };
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        apply(p.weights[l], g.weights[l], s.m.weights[l], s.v.weights[l]);
        apply(p.biases[l], g.biases[l], s.m.biases[l], s.v.biases[l]);
    }
}

} // namespace gridsched::agent
