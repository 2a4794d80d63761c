#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include "gridsched/degradation/chemistry.hpp"
#include "gridsched/degradation/rainflow.hpp"
#include "gridsched/error.hpp"

namespace gridsched::degradation {

inline constexpr double kEndOfLifeSoh = 0.80;

/// Cumulative calendar fade after `t_days` of storage at mean SoC `sigma`.
///
/// Units convention: time in days, and the Arrhenius product is used
/// directly as the fade fraction (no outer exponential). With the LFP
/// coefficients this gives about 10% fade after 1000 days at 25 degC and 50%
/// SoC. Every calendar computation goes through this one function.
inline double calendar_fade(const ChemistryParams& p, double sigma, double temp_k, double t_days) {
    if (t_days <= 0.0) return 0.0;
    return p.k_alpha * std::exp(p.k_beta * sigma) * std::exp(p.k_gamma / temp_k) * std::pow(t_days, p.k_z);
}

inline double calendar_fade_increment(const ChemistryParams& p, double sigma, double temp_k, double t_start_days,
                                      double t_end_days) {
    if (t_start_days < 0.0 || t_end_days < t_start_days) throw InvalidArgument("calendar interval must satisfy 0 <= start <= end");
    if (!(temp_k > 0.0)) throw InvalidArgument("temperature must be positive kelvin");
    const double inc = calendar_fade(p, sigma, temp_k, t_end_days) - calendar_fade(p, sigma, temp_k, t_start_days);
    return std::clamp(inc, 0.0, 1.0);
}

/// Degradation rate contributed by one counted cycle.
inline double cycle_stress(const ChemistryParams& p, const CycleRecord& c, double temp_k) {
    return c.weight * (dod_stress(p, c.dod) + time_stress(p, c.duration_s)) * soc_stress(p, c.mean_soc) *
           temperature_stress(p, temp_k);
}

/// Cycle capacity fade as a function of accumulated cycle stress: a fast SEI
/// formation term followed by a slow linear-exponential term.
inline double capacity_fade_from_stress(const ChemistryParams& p, double stress) {
    return 1.0 - p.alpha_sei * std::exp(-p.beta_sei * stress) - (1.0 - p.alpha_sei) * std::exp(-stress);
}

/// Battery memory carried across episodes.
struct AgingLedger {
    double cumulative_cycle_stress = 0.0;
    double cumulative_calendar_seconds = 0.0;
    double cycle_fade = 0.0;
    double calendar_fade = 0.0;
    double soh = 1.0;
    int replacements = 0;
};

struct EpisodeAging {
    double delta_q_cycle = 0.0;
    double delta_q_cal = 0.0;
    double soh_after = 1.0; ///< before any end-of-life reset
    double equivalent_cycles = 0.0;
    bool replaced = false;
};

/// Ages the ledger by one episode. Cycle stress accumulates over every
/// rainflow cycle and the fade curve is re-evaluated at the new total, so the
/// per-episode increment follows the nonlinear fade curve. Calendar fade uses
/// the episode's mean SoC. A battery that reaches 80% SoH is replaced.
inline EpisodeAging apply_episode_aging(AgingLedger& ledger, const ChemistryParams& p,
                                        std::span<const double> soc_profile, double temp_k, double episode_days,
                                        double dt_per_step_s = 3600.0) {
    EpisodeAging out;
    if (!soc_profile.empty()) {
        const auto cycles = rainflow_count(soc_profile, dt_per_step_s);
        double stress = 0.0;
        for (const auto& c : cycles) stress += cycle_stress(p, c, temp_k);
        out.equivalent_cycles = equivalent_cycles(cycles);
        const double new_cycle_fade = capacity_fade_from_stress(p, ledger.cumulative_cycle_stress + stress);
        out.delta_q_cycle = std::max(new_cycle_fade - ledger.cycle_fade, 0.0);
        ledger.cumulative_cycle_stress += stress;
        ledger.cycle_fade = new_cycle_fade;
    }
    if (episode_days > 0.0 && !soc_profile.empty()) {
        const double sigma =
            std::accumulate(soc_profile.begin(), soc_profile.end(), 0.0) / static_cast<double>(soc_profile.size());
        const double t0 = ledger.cumulative_calendar_seconds / kSecondsPerDay;
        out.delta_q_cal = calendar_fade_increment(p, sigma, temp_k, t0, t0 + episode_days);
        ledger.cumulative_calendar_seconds += episode_days * kSecondsPerDay;
        ledger.calendar_fade += out.delta_q_cal;
    }
    ledger.soh = 1.0 - ledger.cycle_fade - ledger.calendar_fade;
    out.soh_after = ledger.soh;
    if (ledger.soh <= kEndOfLifeSoh) {
        const int n = ledger.replacements + 1;
        ledger = AgingLedger{};
        ledger.replacements = n;
        out.replaced = true;
    }
    return out;
}

/// Per-kWh-throughput cycle aging prices, refreshed once per episode.
struct DegradationCoefficients {
    double alpha_ess = 0.35;
    double alpha_ev = 0.45;
};

/// New aging price from the episode's cycle fade and throughput
/// (sum |P| dt in kWh). Zero throughput keeps the previous price.
inline double update_degradation_coefficient(double previous, double delta_q_cycle, const core::BatterySpec& spec,
                                             double throughput_kwh) {
    if (!(throughput_kwh > 0.0)) return previous;
    const double a = spec.cost_per_kwh * delta_q_cycle * spec.capacity_kwh / throughput_kwh;
    return (std::isfinite(a) && a > 0.0) ? a : previous;
}

inline DegradationCoefficients update_degradation_coefficients(const DegradationCoefficients& c,
                                                               double delta_q_cycle_ess, double throughput_ess_kwh,
                                                               const core::BatterySpec& ess,
                                                               double delta_q_cycle_ev, double throughput_ev_kwh,
                                                               const core::BatterySpec& ev) {
    return {update_degradation_coefficient(c.alpha_ess, delta_q_cycle_ess, ess, throughput_ess_kwh),
            update_degradation_coefficient(c.alpha_ev, delta_q_cycle_ev, ev, throughput_ev_kwh)};
}

struct CycleCost {
    double ess = 0.0;
    double ev = 0.0;
};

/// Instantaneous cycle aging cost. Charging degrades as much as discharging.
inline CycleCost step_cycle_cost(const DegradationCoefficients& c, double ess_kw, double ev_kw, double dt_h = 1.0) {
    return {c.alpha_ess * std::abs(ess_kw) * dt_h, c.alpha_ev * std::abs(ev_kw) * dt_h};
}

inline double calendar_cost(double delta_q_cal, const core::BatterySpec& spec) {
    return delta_q_cal * spec.cost_per_kwh * spec.capacity_kwh;
}

struct CostAttribution {
    double building = 0.0;
    double ev_user = 0.0;
    double total = 0.0;
};

/// The building pays all cycle aging (its own ESS and the EVs it dispatches)
/// plus ESS calendar aging. EV calendar aging stays with the EV owners.
inline CostAttribution episode_cost_attribution(double ess_cycle_cost, double ev_cycle_cost, double ess_cal_cost,
                                                double ev_cal_cost) {
    CostAttribution a;
    a.building = ess_cycle_cost + ev_cycle_cost + ess_cal_cost;
    a.ev_user = ev_cal_cost;
    a.total = ess_cycle_cost + ev_cycle_cost + ess_cal_cost + ev_cal_cost;
    return a;
}

} // namespace gridsched::degradation
