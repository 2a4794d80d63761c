#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "gridsched/agent/dqn.hpp"
#include "gridsched/error.hpp"

namespace gridsched::agent {

inline constexpr int kCheckpointVersion = 1;

namespace detail {
template <class M>
nlohmann::json dense_to_json(const M& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

template <class M>
M dense_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw SchemaViolation("tensor payload size mismatch");
    M m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<typename M::Scalar>(data[static_cast<std::size_t>(i)]);
    return m;
}

template <class Scalar>
nlohmann::json params_to_json(const Parameters<Scalar>& p) {
    auto layers = nlohmann::json::array();
    for (std::size_t l = 0; l < p.weights.size(); ++l)
        layers.push_back({{"weight", dense_to_json(p.weights[l])}, {"bias", dense_to_json(p.biases[l])}});
    return layers;
}

template <class Scalar>
Parameters<Scalar> params_from_json(const nlohmann::json& j, const NetworkArch& arch) {
    auto p = Parameters<Scalar>::zeros_like(arch);
    if (j.size() != p.weights.size()) throw SchemaViolation("checkpoint layer count does not match the architecture");
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        auto w = dense_from_json<typename Parameters<Scalar>::Matrix>(j[l].at("weight"));
        auto b = dense_from_json<typename Parameters<Scalar>::Matrix>(j[l].at("bias"));
        if (w.rows() != p.weights[l].rows() || w.cols() != p.weights[l].cols() || b.rows() != p.biases[l].rows())
            throw SchemaViolation("checkpoint tensor shape does not match the architecture");
        p.weights[l] = w;
        p.biases[l] = b.col(0);
    }
    return p;
}
} // namespace detail

inline nlohmann::json agent_config_to_json(const AgentConfig& c) {
    return {{"variant", std::string(to_string(c.variant))},
            {"gamma", c.gamma},
            {"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"buffer_capacity", c.buffer_capacity},
            {"target_sync_period", c.target_sync_period},
            {"epsilon_start", c.epsilon_start},
            {"epsilon_min", c.epsilon_min},
            {"epsilon_decay", c.epsilon_decay},
            {"alpha_per", c.alpha_per},
            {"alpha_dev_start", c.alpha_dev_start},
            {"alpha_dev_end", c.alpha_dev_end},
            {"priority_floor", c.priority_floor},
            {"center_advantage", c.center_advantage},
            {"reward_scale", c.reward_scale},
            {"hidden", c.hidden},
            {"episodes", c.episodes},
            {"seed", c.seed}};
}

inline AgentConfig agent_config_from_json(const nlohmann::json& j) {
    AgentConfig c;
    c.variant = variant_from_string(j.at("variant").get<std::string>());
    c.gamma = j.at("gamma").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
    c.target_sync_period = j.at("target_sync_period").get<int>();
    c.epsilon_start = j.at("epsilon_start").get<double>();
    c.epsilon_min = j.at("epsilon_min").get<double>();
    c.epsilon_decay = j.at("epsilon_decay").get<double>();
    c.alpha_per = j.at("alpha_per").get<double>();
    c.alpha_dev_start = j.at("alpha_dev_start").get<double>();
    c.alpha_dev_end = j.at("alpha_dev_end").get<double>();
    c.priority_floor = j.at("priority_floor").get<double>();
    c.center_advantage = j.at("center_advantage").get<bool>();
    c.reward_scale = j.at("reward_scale").get<double>();
    c.hidden = j.at("hidden").get<std::vector<int>>();
    c.episodes = j.at("episodes").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

/// Architecture, both parameter sets, optimizer moments, epsilon and the
/// episode counter. The replay buffer is not saved.
inline nlohmann::json checkpoint_to_json(const DqnAgent& a) {
    nlohmann::json j;
    j["format"] = "gridsched-dqn";
    j["version"] = kCheckpointVersion;
    j["config"] = agent_config_to_json(a.config());
    j["architecture"] = {{"input_dim", a.arch().input_dim},
                         {"hidden", a.arch().hidden},
                         {"actions", a.arch().actions},
                         {"dueling", a.arch().dueling},
                         {"center_advantage", a.arch().center_advantage}};
    j["online"] = detail::params_to_json(a.online());
    j["target"] = detail::params_to_json(a.target());
    j["adam"] = {{"step", a.adam().step}, {"m", detail::params_to_json(a.adam().m)}, {"v", detail::params_to_json(a.adam().v)}};
    j["epsilon"] = a.epsilon();
    j["episodes_done"] = a.episodes_done();
    return j;
}

inline DqnAgent checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "gridsched-dqn") throw SchemaViolation("not an agent checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) throw SchemaViolation("unsupported checkpoint version");
        DqnAgent a(agent_config_from_json(j.at("config")));
        const auto& arch = j.at("architecture");
        NetworkArch expect = a.arch();
        NetworkArch got{arch.at("input_dim").get<int>(), arch.at("hidden").get<std::vector<int>>(),
                        arch.at("actions").get<int>(), arch.at("dueling").get<bool>(),
                        arch.at("center_advantage").get<bool>()};
        if (!(expect == got)) throw SchemaViolation("checkpoint architecture does not match its configuration");
        a.online() = detail::params_from_json<Scalar>(j.at("online"), expect);
        a.target() = detail::params_from_json<Scalar>(j.at("target"), expect);
        a.adam().step = j.at("adam").at("step").get<long long>();
        a.adam().m = detail::params_from_json<Scalar>(j.at("adam").at("m"), expect);
        a.adam().v = detail::params_from_json<Scalar>(j.at("adam").at("v"), expect);
        a.set_progress(j.at("epsilon").get<double>(), j.at("episodes_done").get<int>());
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("malformed checkpoint: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw SchemaViolation(std::string("malformed checkpoint: ") + e.what());
    }
}

inline void save_checkpoint(const DqnAgent& a, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(a).dump();
    if (!out) throw IoError("write failed: " + path.string());
}

inline DqnAgent load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigUnreadable("cannot open checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation("checkpoint " + path.string() + " is not valid JSON: " + e.what());
    }
    return checkpoint_from_json(j);
}

} // namespace gridsched::agent
