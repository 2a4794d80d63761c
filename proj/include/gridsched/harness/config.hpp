#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "toml.hpp"

#include "gridsched/error.hpp"
#include "gridsched/harness/experiment.hpp"

namespace gridsched::harness {

namespace detail {

/// A TOML table whose keys must all be consumed; leftovers are rejected.
class Section {
public:
    Section(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

    [[nodiscard]] bool present() const { return t_ != nullptr; }

    template <typename T>
    void read(std::string_view key, T& out) {
        const toml::node* n = take(key);
        if (!n) return;
        if constexpr (std::is_same_v<T, bool>) {
            if (!n->is_boolean()) fail(key, "a boolean");
            out = n->as_boolean()->get();
        } else if constexpr (std::is_integral_v<T>) {
            if (!n->is_integer()) fail(key, "an integer");
            const auto v = n->as_integer()->get();
            if constexpr (std::is_unsigned_v<T>) {
                if (v < 0) fail(key, "a nonnegative integer");
            }
            out = static_cast<T>(v);
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!n->is_number()) fail(key, "a number");
            out = n->is_integer() ? static_cast<double>(n->as_integer()->get()) : n->as_floating_point()->get();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!n->is_string()) fail(key, "a string");
            out = n->as_string()->get();
        } else {
            static_assert(sizeof(T) == 0, "unsupported config type");
        }
    }

    /// Numeric array of a fixed or free length (`length` 0 means any nonzero length).
    std::optional<std::vector<double>> read_array(std::string_view key, std::size_t length = 0) {
        const toml::node* n = take(key);
        if (!n) return std::nullopt;
        const auto* arr = n->as_array();
        if (!arr) fail(key, "an array");
        std::vector<double> v;
        for (const auto& e : *arr) {
            if (!e.is_number()) fail(key, "an array of numbers");
            v.push_back(e.is_integer() ? static_cast<double>(e.as_integer()->get()) : e.as_floating_point()->get());
        }
        if (length != 0 && v.size() != length) fail(key, "an array of " + std::to_string(length) + " numbers");
        if (v.empty()) fail(key, "a nonempty array");
        return v;
    }

    /// Nested table, or an absent section when the key is missing.
    Section sub(std::string_view key) {
        const toml::node* n = take(key);
        if (n && !n->is_table()) fail(key, "a table");
        return Section(n ? n->as_table() : nullptr, name_ + "." + std::string(key));
    }

    void finish() const {
        if (!t_) return;
        for (const auto& [k, v] : *t_) {
            if (!seen_.count(std::string(k.str())))
                throw SchemaViolation("unknown key '" + std::string(k.str()) + "' in [" + name_ + "]");
        }
    }

private:
    const toml::node* take(std::string_view key) {
        if (!t_) return nullptr;
        seen_.insert(std::string(key));
        return t_->get(key);
    }

    [[noreturn]] void fail(std::string_view key, const std::string& expected) const {
        throw SchemaViolation("[" + name_ + "] " + std::string(key) + " must be " + expected);
    }

    const toml::table* t_;
    std::string name_;
    std::set<std::string> seen_;
};

inline void read_chemistry(Section& s, degradation::ChemistryParams& p) {
    s.read("k_alpha", p.k_alpha);
    s.read("k_beta", p.k_beta);
    s.read("k_gamma", p.k_gamma);
    s.read("k_z", p.k_z);
    s.read("k_delta1", p.k_delta1);
    s.read("k_delta2", p.k_delta2);
    s.read("k_delta3", p.k_delta3);
    s.read("alpha_sei", p.alpha_sei);
    s.read("beta_sei", p.beta_sei);
    s.read("k_sigma", p.k_sigma);
    s.read("sigma_ref", p.sigma_ref);
    s.read("k_T", p.k_T);
    s.read("T_ref", p.T_ref);
    s.read("k_t", p.k_t);
    s.finish();
}

inline void read_battery(Section& s, core::BatterySpec& b, std::optional<degradation::ChemistryParams>& chem) {
    std::string chemistry(core::to_string(b.chemistry));
    s.read("chemistry", chemistry);
    b.chemistry = core::chemistry_from_string(chemistry);
    s.read("capacity_kwh", b.capacity_kwh);
    s.read("charge_power_min_kw", b.charge_power.min);
    s.read("charge_power_max_kw", b.charge_power.max);
    s.read("discharge_power_min_kw", b.discharge_power.min);
    s.read("discharge_power_max_kw", b.discharge_power.max);
    s.read("charge_eff", b.charge_eff);
    s.read("discharge_eff", b.discharge_eff);
    s.read("soc_min", b.soc.min);
    s.read("soc_max", b.soc.max);
    s.read("cost_per_kwh", b.cost_per_kwh);
    auto cs = s.sub("chemistry_params");
    if (cs.present()) {
        auto p = degradation::params_for(b.chemistry);
        read_chemistry(cs, p);
        p.chemistry = b.chemistry;
        chem = p;
    }
}

inline void write_chemistry(toml::table& t, const degradation::ChemistryParams& p) {
    t.insert_or_assign("k_alpha", p.k_alpha);
    t.insert_or_assign("k_beta", p.k_beta);
    t.insert_or_assign("k_gamma", p.k_gamma);
    t.insert_or_assign("k_z", p.k_z);
    t.insert_or_assign("k_delta1", p.k_delta1);
    t.insert_or_assign("k_delta2", p.k_delta2);
    t.insert_or_assign("k_delta3", p.k_delta3);
    t.insert_or_assign("alpha_sei", p.alpha_sei);
    t.insert_or_assign("beta_sei", p.beta_sei);
    t.insert_or_assign("k_sigma", p.k_sigma);
    t.insert_or_assign("sigma_ref", p.sigma_ref);
    t.insert_or_assign("k_T", p.k_T);
    t.insert_or_assign("T_ref", p.T_ref);
    t.insert_or_assign("k_t", p.k_t);
}

inline toml::table battery_table(const core::BatterySpec& b, const std::optional<degradation::ChemistryParams>& chem) {
    toml::table t;
    t.insert_or_assign("chemistry", std::string(core::to_string(b.chemistry)));
    t.insert_or_assign("capacity_kwh", b.capacity_kwh);
    t.insert_or_assign("charge_power_min_kw", b.charge_power.min);
    t.insert_or_assign("charge_power_max_kw", b.charge_power.max);
    t.insert_or_assign("discharge_power_min_kw", b.discharge_power.min);
    t.insert_or_assign("discharge_power_max_kw", b.discharge_power.max);
    t.insert_or_assign("charge_eff", b.charge_eff);
    t.insert_or_assign("discharge_eff", b.discharge_eff);
    t.insert_or_assign("soc_min", b.soc.min);
    t.insert_or_assign("soc_max", b.soc.max);
    t.insert_or_assign("cost_per_kwh", b.cost_per_kwh);
    toml::table c;
    write_chemistry(c, chem ? *chem : degradation::params_for(b.chemistry));
    t.insert_or_assign("chemistry_params", std::move(c));
    return t;
}

inline std::int64_t to_int(std::uint64_t v) {
    if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        throw InvalidArgument("seed does not fit a TOML integer");
    return static_cast<std::int64_t>(v);
}

} // namespace detail

/// Builds an experiment configuration from a parsed TOML document. Missing
/// keys keep their defaults; unknown keys and wrong types are rejected.
inline ExperimentConfig config_from_toml(const toml::table& doc) {
    static const std::set<std::string> sections{"scenario", "tariff", "ess", "ev", "agent", "forecast"};
    for (const auto& [k, v] : doc) {
        if (!sections.count(std::string(k.str()))) throw SchemaViolation("unknown section [" + std::string(k.str()) + "]");
        if (!v.is_table()) throw SchemaViolation("[" + std::string(k.str()) + "] must be a table");
    }
    auto table = [&doc](const char* name) { return detail::Section(doc[name].as_table(), name); };

    ExperimentConfig c;
    auto& sc = c.scenario;

    auto s = table("scenario");
    std::string season(to_string(sc.season));
    s.read("season", season);
    sc = default_scenario(season_from_string(season));
    s.read("days", sc.days);
    s.read("eval_days", sc.eval_days);
    s.read("seed", c.scenario_seed);
    s.read("temperature_k", sc.temperature_k);
    s.read("initial_ess_soc", sc.initial_ess_soc);
    s.read("load_csv", sc.load_csv);
    s.read("pv_csv", sc.pv_csv);
    {
        auto l = s.sub("load");
        l.read("base_kw", sc.load.base_kw);
        l.read("office_peak_kw", sc.load.office_peak_kw);
        l.read("office_start_hour", sc.load.office_start_hour);
        l.read("office_end_hour", sc.load.office_end_hour);
        l.read("weekend_factor", sc.load.weekend_factor);
        l.read("noise_std_kw", sc.load.noise_std_kw);
        l.read("spike_probability", sc.load.spike_probability);
        l.read("spike_kw", sc.load.spike_kw);
        l.finish();
    }
    {
        auto p = s.sub("pv");
        p.read("peak_kw", sc.pv.peak_kw);
        p.read("sunrise_hour", sc.pv.sunrise_hour);
        p.read("sunset_hour", sc.pv.sunset_hour);
        p.read("cloud_persistence", sc.pv.cloud_persistence);
        p.read("cloud_std", sc.pv.cloud_std);
        p.read("cloud_mean", sc.pv.cloud_mean);
        p.finish();
    }
    s.finish();

    auto t = table("tariff");
    t.read("valley", sc.tiers.valley);
    t.read("flat", sc.tiers.flat);
    t.read("peak", sc.tiers.peak);
    t.read("price_coefficient", sc.price_coefficient);
    if (auto prices = t.read_array("buy_price", core::kHoursPerDay)) {
        std::array<double, core::kHoursPerDay> p{};
        std::copy(prices->begin(), prices->end(), p.begin());
        sc.buy_price = p;
    }
    t.finish();

    auto e = table("ess");
    detail::read_battery(e, sc.ess, sc.ess_chemistry);
    e.finish();

    auto v = table("ev");
    v.read("fleet_size", sc.ev_window.fleet_size);
    sc.ev = core::default_ev_fleet_spec(sc.ev_window.fleet_size);
    double vehicle_kwh = 0.0;
    v.read("vehicle_kwh", vehicle_kwh);
    if (vehicle_kwh > 0.0) sc.ev.capacity_kwh = sc.ev_window.fleet_size * vehicle_kwh;
    detail::read_battery(v, sc.ev, sc.ev_chemistry);
    if (vehicle_kwh > 0.0 && std::abs(sc.ev.capacity_kwh - sc.ev_window.fleet_size * vehicle_kwh) > 1e-9)
        throw SchemaViolation("[ev] capacity_kwh contradicts fleet_size * vehicle_kwh");
    v.read("arrival_hour", sc.ev_window.arrival_hour);
    v.read("departure_hour", sc.ev_window.departure_hour);
    v.read("arrival_soc_mean", sc.ev_window.arrival_soc_mean);
    v.read("arrival_soc_std", sc.ev_window.arrival_soc_std);
    v.read("departure_guard", c.env.departure_guard);
    v.finish();

    auto a = table("agent");
    auto& ag = c.agent;
    std::string variant(agent::to_string(ag.variant));
    a.read("variant", variant);
    ag.variant = agent::variant_from_string(variant);
    a.read("gamma", ag.gamma);
    a.read("learning_rate", ag.learning_rate);
    a.read("batch_size", ag.batch_size);
    a.read("buffer_capacity", ag.buffer_capacity);
    a.read("target_sync_period", ag.target_sync_period);
    a.read("epsilon_start", ag.epsilon_start);
    a.read("epsilon_min", ag.epsilon_min);
    a.read("epsilon_decay", ag.epsilon_decay);
    a.read("alpha_per", ag.alpha_per);
    a.read("alpha_dev_start", ag.alpha_dev_start);
    a.read("alpha_dev_end", ag.alpha_dev_end);
    a.read("priority_floor", ag.priority_floor);
    a.read("center_advantage", ag.center_advantage);
    a.read("reward_scale", ag.reward_scale);
    if (auto h = a.read_array("hidden")) {
        ag.hidden.clear();
        for (double w : *h) {
            if (w != std::floor(w)) throw SchemaViolation("[agent] hidden must hold integer widths");
            ag.hidden.push_back(static_cast<int>(w));
        }
    }
    a.read("episodes", ag.episodes);
    a.read("seed", ag.seed);
    a.read("theta_ess", c.env.reward.theta_ess);
    a.read("theta_base", c.env.reward.theta_base);
    a.read("theta_scale", c.env.reward.theta_scale);
    a.read("penalty_weight", c.env.reward.penalty);
    a.read("degradation_blind", c.env.degradation_blind);
    a.finish();

    auto f = table("forecast");
    auto& fh = c.forecast.hyper;
    std::string mode(to_string(c.forecast_mode));
    f.read("mode", mode);
    c.forecast_mode = forecast_mode_from_string(mode);
    f.read("layers", fh.layers);
    f.read("enhancement_nodes", fh.enhancement_nodes);
    f.read("regularization", fh.regularization);
    std::string activation(forecast::to_string(fh.activation));
    f.read("activation", activation);
    fh.activation = forecast::activation_from_string(activation);
    f.read("input_scaling", fh.input_scaling);
    f.read("window", fh.window);
    f.read("alpha_trade", c.forecast.alpha_trade);
    f.finish();

    try {
        sc.validate();
        ag.validate();
    } catch (const InvalidArgument& err) {
        throw SchemaViolation(err.what());
    }
    if (fh.layers < 1 || fh.enhancement_nodes < 1 || fh.window < 1 || !(fh.regularization > 0.0))
        throw SchemaViolation("[forecast] layers, enhancement_nodes and window must be positive, regularization > 0");
    if (!(c.forecast.alpha_trade >= 0.0 && c.forecast.alpha_trade <= 1.0))
        throw SchemaViolation("[forecast] alpha_trade must lie in [0, 1]");
    return c;
}

inline ExperimentConfig parse_config(std::string_view text, std::string_view source = "config") {
    try {
        return config_from_toml(toml::parse(text, source));
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << source << ": " << e.description() << " at line " << e.source().begin.line;
        throw SchemaViolation(msg.str());
    } catch (const InvalidArgument& e) {
        throw SchemaViolation(std::string(source) + ": " + e.what());
    }
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigUnreadable("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string());
}

/// Every setting of a run, resolved to concrete values.
inline toml::table config_to_toml(const ExperimentConfig& c) {
    const auto& sc = c.scenario;
    toml::table scenario{{"season", std::string(to_string(sc.season))},
                         {"days", sc.days},
                         {"eval_days", sc.eval_days},
                         {"seed", detail::to_int(c.scenario_seed)},
                         {"temperature_k", sc.temperature_k},
                         {"initial_ess_soc", sc.initial_ess_soc},
                         {"load_csv", sc.load_csv},
                         {"pv_csv", sc.pv_csv}};
    scenario.insert_or_assign("load", toml::table{{"base_kw", sc.load.base_kw},
                                                  {"office_peak_kw", sc.load.office_peak_kw},
                                                  {"office_start_hour", sc.load.office_start_hour},
                                                  {"office_end_hour", sc.load.office_end_hour},
                                                  {"weekend_factor", sc.load.weekend_factor},
                                                  {"noise_std_kw", sc.load.noise_std_kw},
                                                  {"spike_probability", sc.load.spike_probability},
                                                  {"spike_kw", sc.load.spike_kw}});
    scenario.insert_or_assign("pv", toml::table{{"peak_kw", sc.pv.peak_kw},
                                                {"sunrise_hour", sc.pv.sunrise_hour},
                                                {"sunset_hour", sc.pv.sunset_hour},
                                                {"cloud_persistence", sc.pv.cloud_persistence},
                                                {"cloud_std", sc.pv.cloud_std},
                                                {"cloud_mean", sc.pv.cloud_mean}});

    toml::table tariff{{"valley", sc.tiers.valley},
                       {"flat", sc.tiers.flat},
                       {"peak", sc.tiers.peak},
                       {"price_coefficient", sc.price_coefficient}};
    toml::array prices;
    for (double p : sc.buy_price ? *sc.buy_price : tiered_prices(sc.tiers)) prices.push_back(p);
    tariff.insert_or_assign("buy_price", std::move(prices));

    auto ev = detail::battery_table(sc.ev, sc.ev_chemistry);
    ev.insert_or_assign("fleet_size", sc.ev_window.fleet_size);
    ev.insert_or_assign("arrival_hour", sc.ev_window.arrival_hour);
    ev.insert_or_assign("departure_hour", sc.ev_window.departure_hour);
    ev.insert_or_assign("arrival_soc_mean", sc.ev_window.arrival_soc_mean);
    ev.insert_or_assign("arrival_soc_std", sc.ev_window.arrival_soc_std);
    ev.insert_or_assign("departure_guard", c.env.departure_guard);

    const auto& ag = c.agent;
    toml::array hidden;
    for (int h : ag.hidden) hidden.push_back(h);
    toml::table agent_t{{"variant", std::string(agent::to_string(ag.variant))},
                        {"gamma", ag.gamma},
                        {"learning_rate", ag.learning_rate},
                        {"batch_size", static_cast<std::int64_t>(ag.batch_size)},
                        {"buffer_capacity", static_cast<std::int64_t>(ag.buffer_capacity)},
                        {"target_sync_period", ag.target_sync_period},
                        {"epsilon_start", ag.epsilon_start},
                        {"epsilon_min", ag.epsilon_min},
                        {"epsilon_decay", ag.epsilon_decay},
                        {"alpha_per", ag.alpha_per},
                        {"alpha_dev_start", ag.alpha_dev_start},
                        {"alpha_dev_end", ag.alpha_dev_end},
                        {"priority_floor", ag.priority_floor},
                        {"center_advantage", ag.center_advantage},
                        {"reward_scale", ag.reward_scale},
                        {"episodes", ag.episodes},
                        {"seed", detail::to_int(ag.seed)},
                        {"theta_ess", c.env.reward.theta_ess},
                        {"theta_base", c.env.reward.theta_base},
                        {"theta_scale", c.env.reward.theta_scale},
                        {"penalty_weight", c.env.reward.penalty},
                        {"degradation_blind", c.env.degradation_blind}};
    agent_t.insert_or_assign("hidden", std::move(hidden));

    const auto& fh = c.forecast.hyper;
    toml::table forecast_t{{"mode", std::string(to_string(c.forecast_mode))},
                           {"layers", fh.layers},
                           {"enhancement_nodes", fh.enhancement_nodes},
                           {"regularization", fh.regularization},
                           {"activation", std::string(forecast::to_string(fh.activation))},
                           {"input_scaling", fh.input_scaling},
                           {"window", fh.window},
                           {"alpha_trade", c.forecast.alpha_trade}};

    toml::table doc;
    doc.insert_or_assign("scenario", std::move(scenario));
    doc.insert_or_assign("tariff", std::move(tariff));
    doc.insert_or_assign("ess", detail::battery_table(sc.ess, sc.ess_chemistry));
    doc.insert_or_assign("ev", std::move(ev));
    doc.insert_or_assign("agent", std::move(agent_t));
    doc.insert_or_assign("forecast", std::move(forecast_t));
    return doc;
}

inline std::string config_to_string(const ExperimentConfig& c) {
    std::ostringstream out;
    out << config_to_toml(c) << '\n';
    return out.str();
}

/// Writes the effective configuration next to a run's outputs.
inline void write_config_snapshot(const std::filesystem::path& path, const ExperimentConfig& c) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << config_to_string(c);
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace gridsched::harness
