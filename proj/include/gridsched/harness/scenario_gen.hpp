#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "gridsched/core/csv.hpp"
#include "gridsched/core/types.hpp"
#include "gridsched/degradation/chemistry.hpp"
#include "gridsched/env/scenario.hpp"
#include "gridsched/error.hpp"

namespace gridsched::harness {

enum class Season { Summer, Winter };

inline std::string_view to_string(Season s) { return s == Season::Summer ? "summer" : "winter"; }
inline Season season_from_string(std::string_view s) {
    if (s == "summer") return Season::Summer;
    if (s == "winter") return Season::Winter;
    throw InvalidArgument("unknown season '" + std::string(s) + "' (expected summer or winter)");
}

/// Office-building load: base plus a working-hours bump, lighter on
/// weekends, with noise and occasional batch jobs around midnight.
struct LoadGenerator {
    double base_kw = 45.0;
    double office_peak_kw = 85.0;
    int office_start_hour = 7;
    int office_end_hour = 21;
    double weekend_factor = 0.55;
    double noise_std_kw = 6.0;
    double spike_probability = 0.35; ///< per day
    double spike_kw = 45.0;
};

/// Clear-sky bell between sunrise and sunset scaled by an AR(1) cloud factor.
struct PvGenerator {
    double peak_kw = 120.0;
    int sunrise_hour = 5;
    int sunset_hour = 19;
    double cloud_persistence = 0.85;
    double cloud_std = 0.12;
    double cloud_mean = 0.8;
};

/// Three-tier time-of-use tariff.
struct TariffTiers {
    double valley = 0.35;
    double flat = 0.75;
    double peak = 1.25;
};

struct ScenarioConfig {
    Season season = Season::Summer;
    int days = 60;
    int eval_days = 12;
    double temperature_k = 308.15;
    LoadGenerator load{};
    PvGenerator pv{};
    TariffTiers tiers{};
    std::optional<std::array<double, core::kHoursPerDay>> buy_price; ///< overrides the tiers
    double price_coefficient = 0.9;
    std::string load_csv; ///< replaces the generated load when set
    std::string pv_csv;
    core::BatterySpec ess = core::default_ess_spec();
    core::BatterySpec ev = core::default_ev_fleet_spec();
    core::EvSessionWindow ev_window{};
    double initial_ess_soc = 0.5;
    std::optional<degradation::ChemistryParams> ess_chemistry; ///< overrides the chemistry defaults
    std::optional<degradation::ChemistryParams> ev_chemistry;

    [[nodiscard]] int train_days() const { return days - eval_days; }

    void validate() const {
        if (days < 2) throw InvalidArgument("scenario needs at least two days");
        if (eval_days < 1 || eval_days >= days) throw InvalidArgument("eval_days must lie in [1, days)");
        if (!(temperature_k > 0.0)) throw InvalidArgument("temperature must be positive kelvin");
        if (load.base_kw < 0.0 || load.office_peak_kw < 0.0 || load.noise_std_kw < 0.0 || load.spike_kw < 0.0)
            throw InvalidArgument("load generator parameters must be nonnegative");
        if (load.spike_probability < 0.0 || load.spike_probability > 1.0) throw InvalidArgument("spike probability must lie in [0, 1]");
        if (load.office_start_hour < 0 || load.office_end_hour > 24 || load.office_start_hour >= load.office_end_hour)
            throw InvalidArgument("office hours must satisfy 0 <= start < end <= 24");
        if (pv.peak_kw < 0.0 || pv.cloud_std < 0.0) throw InvalidArgument("PV generator parameters must be nonnegative");
        if (pv.sunrise_hour < 0 || pv.sunset_hour > 24 || pv.sunrise_hour >= pv.sunset_hour)
            throw InvalidArgument("daylight must satisfy 0 <= sunrise < sunset <= 24");
        if (!(pv.cloud_persistence >= 0.0 && pv.cloud_persistence < 1.0)) throw InvalidArgument("cloud persistence must lie in [0, 1)");
        if (!(tiers.valley > 0.0 && tiers.flat > 0.0 && tiers.peak > 0.0)) throw InvalidArgument("tariff tiers must be positive");
        ess.validate();
        ev.validate();
        ev_window.validate();
    }
};

inline ScenarioConfig default_scenario(Season season) {
    ScenarioConfig c;
    c.season = season;
    if (season == Season::Winter) {
        c.pv.peak_kw = 80.0;
        c.pv.sunrise_hour = 7;
        c.pv.sunset_hour = 17;
        c.pv.cloud_mean = 0.7;
        c.load.base_kw = 55.0;
    }
    return c;
}

/// Valley overnight, peak late morning and early evening, flat otherwise.
inline std::array<double, core::kHoursPerDay> tiered_prices(const TariffTiers& t) {
    std::array<double, core::kHoursPerDay> p{};
    for (std::size_t h = 0; h < core::kHoursPerDay; ++h) {
        if (h < 7 || h == 23)
            p[h] = t.valley;
        else if ((h >= 10 && h < 15) || (h >= 18 && h < 21))
            p[h] = t.peak;
        else
            p[h] = t.flat;
    }
    return p;
}

inline std::vector<double> generate_load(const LoadGenerator& g, std::size_t days, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> load(days * core::kHoursPerDay);
    for (std::size_t d = 0; d < days; ++d) {
        const bool weekend = d % 7 >= 5;
        const bool spike = u(rng) < g.spike_probability;
        const double spike_size = g.spike_kw * (0.5 + u(rng));
        for (std::size_t h = 0; h < core::kHoursPerDay; ++h) {
            double v = g.base_kw;
            const auto hi = static_cast<int>(h);
            if (hi >= g.office_start_hour && hi < g.office_end_hour) {
                const double x = (hi - g.office_start_hour + 0.5) / (g.office_end_hour - g.office_start_hour);
                v += g.office_peak_kw * std::sin(std::numbers::pi * x) * (weekend ? g.weekend_factor : 1.0);
            }
            if (spike && h <= 1) v += spike_size;
            v += g.noise_std_kw * noise(rng);
            load[d * core::kHoursPerDay + h] = std::max(v, 0.0);
        }
    }
    return load;
}

inline std::vector<double> generate_pv(const PvGenerator& g, std::size_t days, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> pv(days * core::kHoursPerDay, 0.0);
    double cloud = g.cloud_mean;
    for (std::size_t t = 0; t < pv.size(); ++t) {
        cloud = g.cloud_mean + g.cloud_persistence * (cloud - g.cloud_mean) + g.cloud_std * noise(rng);
        cloud = std::clamp(cloud, 0.1, 1.0);
        const auto h = static_cast<int>(t % core::kHoursPerDay);
        if (h < g.sunrise_hour || h >= g.sunset_hour) continue;
        const double x = (h - g.sunrise_hour + 0.5) / (g.sunset_hour - g.sunrise_hour);
        pv[t] = g.peak_kw * std::pow(std::sin(std::numbers::pi * x), 1.5) * cloud;
    }
    return pv;
}

/// Builds a scenario: generated or CSV profiles, tariff, batteries and the
/// per-day fleet arrival SoC. Deterministic per seed.
inline env::Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const auto days = static_cast<std::size_t>(cfg.days);
    std::mt19937_64 load_rng(seed * 0x9e3779b97f4a7c15ULL + 11);
    std::mt19937_64 pv_rng(seed * 0x9e3779b97f4a7c15ULL + 23);

    env::Scenario s;
    s.profile.load = cfg.load_csv.empty() ? generate_load(cfg.load, days, load_rng) : core::read_profile_csv(cfg.load_csv);
    s.profile.pv = cfg.pv_csv.empty() ? generate_pv(cfg.pv, days, pv_rng) : core::read_profile_csv(cfg.pv_csv);
    if (s.profile.load.size() < days * core::kHoursPerDay || s.profile.pv.size() < days * core::kHoursPerDay)
        throw SchemaViolation("profile CSV shorter than the configured day count");
    s.profile.load.resize(days * core::kHoursPerDay);
    s.profile.pv.resize(days * core::kHoursPerDay);
    s.profile.pv_min = 0.0;
    s.profile.pv_max = std::max(cfg.pv.peak_kw, *std::max_element(s.profile.pv.begin(), s.profile.pv.end()));
    s.tariff.buy_price = cfg.buy_price ? *cfg.buy_price : tiered_prices(cfg.tiers);
    s.tariff.price_coefficient = cfg.price_coefficient;
    s.ev_window = cfg.ev_window;
    s.ess = cfg.ess;
    s.ev = cfg.ev;
    s.ess_chemistry = cfg.ess_chemistry ? *cfg.ess_chemistry : degradation::params_for(cfg.ess.chemistry);
    s.ev_chemistry = cfg.ev_chemistry ? *cfg.ev_chemistry : degradation::params_for(cfg.ev.chemistry);
    s.temperature_k = cfg.temperature_k;
    s.initial_ess_soc = cfg.initial_ess_soc;
    s.arrival_soc = env::sample_arrival_socs(cfg.ev_window, cfg.ev.soc, days, seed * 0x9e3779b97f4a7c15ULL + 37);
    s.validate();
    return s;
}

} // namespace gridsched::harness
