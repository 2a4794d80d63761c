#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "gridsched/degradation/aging.hpp"
#include "gridsched/env/environment.hpp"
#include "gridsched/error.hpp"

namespace gridsched::harness {

/// Chooses an action index for the environment's current state.
using Policy = std::function<std::size_t(const env::MicrogridEnv&)>;

struct RunSummary {
    std::string policy;
    std::size_t first_day = 0;
    std::size_t days = 0;
    double operating_cost = 0.0; ///< energy cost - revenue + all degradation costs
    double revenue = 0.0;
    double energy_cost = 0.0;
    double building_cost = 0.0; ///< C_build
    double ev_user_cost = 0.0;  ///< C_EV_user
    double ess_cycle_cost = 0.0;
    double ev_cycle_cost = 0.0;
    double ess_calendar_cost = 0.0;
    double ev_calendar_cost = 0.0;
    double ess_throughput_kwh = 0.0; ///< cumulative scheduling power
    double ev_throughput_kwh = 0.0;
    double ess_scheduling_cost = 0.0; ///< cycle + calendar cost of the device
    double ev_scheduling_cost = 0.0;
    double frozen_objective = 0.0; ///< energy cost - revenue + initial-price cycle costs
    double ess_soh = 1.0;
    double ev_soh = 1.0;
    int departure_violations = 0;
    double mean_latency_ms = 0.0;
    double max_latency_ms = 0.0;
    double wall_clock_s = 0.0;
};

struct RunResult {
    RunSummary summary;
    std::vector<env::TraceRow> trace;
    std::vector<env::EpisodeOutcome> episodes;
};

/// Every cost and flow total of a run, recomputed from its trace alone.
inline RunSummary summarize_trace(const std::vector<env::TraceRow>& trace,
                                  const degradation::DegradationCoefficients& frozen = {}) {
    RunSummary s;
    for (const auto& r : trace) {
        s.revenue += r.revenue;
        s.energy_cost += r.energy_cost;
        s.ess_cycle_cost += r.ess_cycle_cost;
        s.ev_cycle_cost += r.ev_cycle_cost;
        s.ess_calendar_cost += r.ess_calendar_cost;
        s.ev_calendar_cost += r.ev_calendar_cost;
        s.ess_throughput_kwh += std::abs(r.ess_executed);
        s.ev_throughput_kwh += std::abs(r.ev_executed);
        s.departure_violations += r.departure_violation ? 1 : 0;
        s.frozen_objective += r.energy_cost - r.revenue + frozen.alpha_ess * std::abs(r.ess_executed) +
                              frozen.alpha_ev * std::abs(r.ev_executed);
        s.max_latency_ms = std::max(s.max_latency_ms, r.latency_ms);
        s.mean_latency_ms += r.latency_ms;
    }
    if (!trace.empty()) {
        s.mean_latency_ms /= static_cast<double>(trace.size());
        s.first_day = trace.front().day;
        s.days = trace.size() / core::kHoursPerDay;
    }
    const auto attribution = degradation::episode_cost_attribution(s.ess_cycle_cost, s.ev_cycle_cost,
                                                                   s.ess_calendar_cost, s.ev_calendar_cost);
    s.building_cost = attribution.building;
    s.ev_user_cost = attribution.ev_user;
    s.operating_cost = s.energy_cost - s.revenue + attribution.total;
    s.ess_scheduling_cost = s.ess_cycle_cost + s.ess_calendar_cost;
    s.ev_scheduling_cost = s.ev_cycle_cost + s.ev_calendar_cost;
    return s;
}

/// Runs a policy over consecutive days. Costs come from the environment,
/// so every policy is accounted identically.
inline RunResult rollout(env::MicrogridEnv& environment, std::size_t first_day, std::size_t days, const Policy& policy,
                         const std::string& name) {
    if (first_day + days > environment.scenario().days()) throw InvalidArgument("rollout extends past the scenario");
    const auto wall0 = std::chrono::steady_clock::now();
    RunResult out;
    out.trace.reserve(days * core::kHoursPerDay);
    for (std::size_t d = first_day; d < first_day + days; ++d) {
        environment.reset(d);
        bool done = false;
        while (!done) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::size_t a = policy(environment);
            const auto t1 = std::chrono::steady_clock::now();
            auto res = environment.step(a);
            res.row.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            out.trace.push_back(res.row);
            done = res.done;
        }
        out.episodes.push_back(environment.last_episode());
    }
    out.summary = summarize_trace(out.trace);
    out.summary.policy = name;
    out.summary.ess_soh = environment.ess_ledger().soh;
    out.summary.ev_soh = environment.ev_ledger().soh;
    out.summary.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
    return out;
}

/// Evaluation protocol: fresh batteries, initial aging prices and the
/// initial ESS SoC at the start of the evaluation window.
inline RunResult evaluate(const env::Scenario& scenario, const forecast::HorizonTable& forecasts, env::EnvConfig cfg,
                          std::size_t first_day, std::size_t days, const Policy& policy, const std::string& name) {
    env::MicrogridEnv e(scenario, forecasts, cfg);
    e.reset_aging();
    e.set_soc_ess(scenario.initial_ess_soc);
    return rollout(e, first_day, days, policy, name);
}

/// Charges each device at full power until it is full, then idles.
inline Policy uncontrolled_policy() {
    return [](const env::MicrogridEnv& e) -> std::size_t {
        const auto& sc = e.scenario();
        const auto& acts = e.actions();
        const std::size_t charge = acts.max_charge_level();
        const std::size_t idle = acts.idle_level();
        const bool ess_full = e.soc_ess() >= sc.ess.soc.max - 1e-12;
        const bool ev_charge = sc.ev_window.online(e.hour()) && e.soc_ev() < sc.ev.soc.max - 1e-12;
        return env::ActionTable::encode(ess_full ? idle : charge, ev_charge ? charge : idle);
    };
}

/// Always idle; only the building load is served from the grid.
inline Policy idle_policy() {
    return [](const env::MicrogridEnv& e) -> std::size_t {
        const std::size_t idle = e.actions().idle_level();
        const auto mask = e.action_mask();
        const std::size_t a = env::ActionTable::encode(idle, idle);
        if (mask[a]) return a;
        return env::ActionTable::encode(idle, e.actions().max_charge_level());
    };
}

} // namespace gridsched::harness
