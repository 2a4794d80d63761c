#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gridsched/agent/adam.hpp"
#include "gridsched/agent/network.hpp"
#include "gridsched/agent/replay.hpp"
#include "gridsched/env/state.hpp"
#include "gridsched/error.hpp"

namespace gridsched::agent {

enum class Variant { DQN, D2QN, D3QN, D3QNPER };

inline std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::DQN: return "dqn";
    case Variant::D2QN: return "d2qn";
    case Variant::D3QN: return "d3qn";
    case Variant::D3QNPER: return "d3qnper";
    }
    return "d3qnper";
}

inline Variant variant_from_string(std::string_view s) {
    if (s == "dqn") return Variant::DQN;
    if (s == "d2qn") return Variant::D2QN;
    if (s == "d3qn") return Variant::D3QN;
    if (s == "d3qnper") return Variant::D3QNPER;
    throw InvalidArgument("unknown variant '" + std::string(s) + "' (expected dqn, d2qn, d3qn or d3qnper)");
}

inline bool uses_double_q(Variant v) { return v != Variant::DQN; }
inline bool uses_dueling(Variant v) { return v == Variant::D3QN || v == Variant::D3QNPER; }
inline bool uses_per(Variant v) { return v == Variant::D3QNPER; }

struct AgentConfig {
    Variant variant = Variant::D3QNPER;
    double gamma = 0.99;
    double learning_rate = 2.5e-4;
    std::size_t batch_size = 32;
    std::size_t buffer_capacity = 10000;
    int target_sync_period = 16; ///< episodes
    double epsilon_start = 1.0;
    double epsilon_min = 0.05;
    double epsilon_decay = 0.99; ///< per episode
    double alpha_per = 0.95;
    double alpha_dev_start = 0.4;
    double alpha_dev_end = 0.99;
    double priority_floor = 1e-3;
    bool center_advantage = false;
    double reward_scale = 0.01; ///< applied to stored rewards only
    std::vector<int> hidden{128, 128, 128};
    int episodes = 2000;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
        if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
        if (batch_size == 0 || buffer_capacity == 0) throw InvalidArgument("batch and buffer sizes must be positive");
        if (target_sync_period < 1) throw InvalidArgument("target sync period must be at least 1");
        if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon_start && epsilon_start <= 1.0))
            throw InvalidArgument("epsilon bounds must satisfy 0 <= min <= start <= 1");
        if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw InvalidArgument("epsilon decay must lie in (0, 1]");
        if (!(priority_floor > 0.0)) throw InvalidArgument("priority floor must be positive");
        if (!(reward_scale > 0.0)) throw InvalidArgument("reward scale must be positive");
        if (hidden.empty()) throw InvalidArgument("network needs at least one hidden layer");
        for (int h : hidden)
            if (h < 1) throw InvalidArgument("hidden layer widths must be positive");
        if (episodes < 1) throw InvalidArgument("episode budget must be positive");
    }
};

/// epsilon_k = max(min, start * decay^k), k counted from 0.
inline double epsilon_schedule(const AgentConfig& c, int episode_index) {
    return std::max(c.epsilon_min, c.epsilon_start * std::pow(c.epsilon_decay, episode_index));
}

/// Importance-sampling exponent, linear over the episode budget.
inline double alpha_dev_schedule(const AgentConfig& c, int episode_index) {
    if (c.episodes <= 1) return c.alpha_dev_end;
    const double f = std::clamp(static_cast<double>(episode_index) / (c.episodes - 1), 0.0, 1.0);
    return c.alpha_dev_start + f * (c.alpha_dev_end - c.alpha_dev_start);
}

/// Target sync rule on a 1-based episode number.
inline bool should_sync_target(int episode_number, int period) {
    return period == 1 || episode_number % period == 1;
}

/// Argmax over allowed entries; ties go to the lowest index.
template <class Values>
std::size_t masked_argmax(const Values& q, const env::ActionMask& mask) {
    std::size_t best = env::kActionCount;
    for (std::size_t a = 0; a < env::kActionCount; ++a) {
        if (!mask[a]) continue;
        if (best == env::kActionCount || q[static_cast<Eigen::Index>(a)] > q[static_cast<Eigen::Index>(best)]) best = a;
    }
    if (best == env::kActionCount) throw InvalidArgument("every action is masked");
    return best;
}

/// epsilon-greedy over the allowed actions.
template <class Values>
std::size_t select_action(const Values& q, double epsilon, const env::ActionMask& mask, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (epsilon > 0.0 && u(rng) < epsilon) {
        std::array<std::size_t, env::kActionCount> allowed{};
        std::size_t n = 0;
        for (std::size_t a = 0; a < env::kActionCount; ++a)
            if (mask[a]) allowed[n++] = a;
        if (n == 0) throw InvalidArgument("every action is masked");
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        return allowed[pick(rng)];
    }
    return masked_argmax(q, mask);
}

/// Bootstrapped target. Plain DQN takes the target network's max; the
/// double-Q variants evaluate the online argmax with the target network.
template <class OnlineValues, class TargetValues>
double td_target(Variant v, double reward, bool terminal, double gamma, const OnlineValues& q_online_next,
                 const TargetValues& q_target_next, const env::ActionMask& next_mask) {
    if (terminal) return reward;
    if (uses_double_q(v)) {
        const std::size_t a = masked_argmax(q_online_next, next_mask);
        return reward + gamma * static_cast<double>(q_target_next[static_cast<Eigen::Index>(a)]);
    }
    const std::size_t a = masked_argmax(q_target_next, next_mask);
    return reward + gamma * static_cast<double>(q_target_next[static_cast<Eigen::Index>(a)]);
}

using Scalar = float;
using Matrix = QMatrix<Scalar>;

struct LearnStats {
    double loss = 0.0;
    double mean_abs_td = 0.0;
};

/// Value-based learner with online and target networks.
class DqnAgent {
public:
    explicit DqnAgent(AgentConfig cfg)
        : cfg_(std::move(cfg)),
          arch_{static_cast<int>(env::kStateDim), cfg_.hidden, static_cast<int>(env::kActionCount),
                uses_dueling(cfg_.variant), cfg_.center_advantage},
          replay_({cfg_.buffer_capacity, uses_per(cfg_.variant), cfg_.alpha_per, cfg_.priority_floor}),
          explore_rng_(cfg_.seed * 0x9e3779b97f4a7c15ULL + 1),
          replay_rng_(cfg_.seed * 0x9e3779b97f4a7c15ULL + 2) {
        cfg_.validate();
        online_ = Parameters<Scalar>::initialize(arch_, cfg_.seed);
        target_ = online_;
        adam_ = AdamState<Scalar>::zeros_like(arch_);
        epsilon_ = cfg_.epsilon_start;
    }

    [[nodiscard]] const AgentConfig& config() const { return cfg_; }
    [[nodiscard]] const NetworkArch& arch() const { return arch_; }
    [[nodiscard]] const Parameters<Scalar>& online() const { return online_; }
    [[nodiscard]] const Parameters<Scalar>& target() const { return target_; }
    [[nodiscard]] Parameters<Scalar>& online() { return online_; }
    [[nodiscard]] Parameters<Scalar>& target() { return target_; }
    [[nodiscard]] const AdamState<Scalar>& adam() const { return adam_; }
    [[nodiscard]] AdamState<Scalar>& adam() { return adam_; }
    [[nodiscard]] const ReplayBuffer& replay() const { return replay_; }
    [[nodiscard]] double epsilon() const { return epsilon_; }
    [[nodiscard]] int episodes_done() const { return episodes_done_; }
    void set_progress(double epsilon, int episodes_done) {
        epsilon_ = epsilon;
        episodes_done_ = episodes_done;
    }

    [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, 1> q_values(std::span<const double> features) const {
        Matrix x(arch_.input_dim, 1);
        for (int i = 0; i < arch_.input_dim; ++i) x(i, 0) = static_cast<Scalar>(features[static_cast<std::size_t>(i)]);
        return forward<Scalar>(arch_, online_, x).col(0);
    }

    std::size_t act(std::span<const double> features, const env::ActionMask& mask, double epsilon) {
        return select_action(q_values(features), epsilon, mask, explore_rng_);
    }
    std::size_t act(std::span<const double> features, const env::ActionMask& mask) { return act(features, mask, epsilon_); }
    [[nodiscard]] std::size_t greedy(std::span<const double> features, const env::ActionMask& mask) const {
        return masked_argmax(q_values(features), mask);
    }

    void remember(std::span<const double> s, std::size_t a, double reward, std::span<const double> s_next,
                  const env::ActionMask& next_mask, bool terminal) {
        Transition t;
        for (std::size_t i = 0; i < env::kStateDim; ++i) {
            t.state[i] = static_cast<float>(s[i]);
            t.next_state[i] = static_cast<float>(s_next[i]);
        }
        t.action = static_cast<int>(a);
        t.reward = static_cast<float>(reward * cfg_.reward_scale);
        t.next_mask = next_mask;
        t.terminal = terminal;
        replay_.push(t);
    }

    /// One gradient step on a replay batch. Returns nothing until the buffer
    /// holds a full batch.
    std::optional<LearnStats> learn() {
        if (replay_.size() < cfg_.batch_size) return std::nullopt;
        const auto batch = replay_.sample(cfg_.batch_size, alpha_dev_schedule(cfg_, episodes_done_), replay_rng_);
        const auto n = static_cast<Eigen::Index>(batch.indices.size());
        Matrix s(arch_.input_dim, n), sn(arch_.input_dim, n);
        std::vector<int> actions(batch.indices.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& t = replay_.at(batch.indices[static_cast<std::size_t>(i)]);
            s.col(i) = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, 1>>(t.state.data(), arch_.input_dim);
            sn.col(i) = Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, 1>>(t.next_state.data(), arch_.input_dim);
            actions[static_cast<std::size_t>(i)] = t.action;
        }
        const Matrix q_target_next = forward<Scalar>(arch_, target_, sn);
        Matrix q_online_next;
        if (uses_double_q(cfg_.variant)) q_online_next = forward<Scalar>(arch_, online_, sn);
        std::vector<double> targets(batch.indices.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& t = replay_.at(batch.indices[static_cast<std::size_t>(i)]);
            const auto qt = q_target_next.col(i);
            if (uses_double_q(cfg_.variant)) {
                targets[static_cast<std::size_t>(i)] =
                    td_target(cfg_.variant, t.reward, t.terminal, cfg_.gamma, q_online_next.col(i), qt, t.next_mask);
            } else {
                targets[static_cast<std::size_t>(i)] = td_target(cfg_.variant, t.reward, t.terminal, cfg_.gamma, qt, qt, t.next_mask);
            }
        }
        auto res = weighted_td_loss<Scalar>(arch_, online_, s, actions, targets, batch.weights);
        if (!std::isfinite(res.loss)) throw NumericalDivergence("non-finite TD loss after " + std::to_string(adam_.step) + " updates");
        adam_update<Scalar>(online_, res.gradient, adam_, AdamConfig{cfg_.learning_rate});
        LearnStats st;
        st.loss = res.loss;
        for (std::size_t k = 0; k < batch.indices.size(); ++k) {
            st.mean_abs_td += std::abs(res.td_errors[k]) / static_cast<double>(batch.indices.size());
            if (replay_.config().prioritized) replay_.update_priority(batch.indices[k], res.td_errors[k]);
        }
        return st;
    }

    /// Episode bookkeeping: target sync on the 1-based episode number, then
    /// epsilon decay.
    bool end_episode() {
        ++episodes_done_;
        const bool synced = should_sync_target(episodes_done_, cfg_.target_sync_period);
        if (synced) target_ = online_;
        epsilon_ = epsilon_schedule(cfg_, episodes_done_);
        return synced;
    }

private:
    AgentConfig cfg_;
    NetworkArch arch_;
    Parameters<Scalar> online_;
    Parameters<Scalar> target_;
    AdamState<Scalar> adam_;
    ReplayBuffer replay_;
    std::mt19937_64 explore_rng_;
    std::mt19937_64 replay_rng_;
    double epsilon_ = 1.0;
    int episodes_done_ = 0;
};

} // namespace gridsched::agent
