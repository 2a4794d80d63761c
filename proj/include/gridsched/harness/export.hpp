#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "gridsched/env/environment.hpp"
#include "gridsched/error.hpp"
#include "gridsched/harness/experiment.hpp"
#include "gridsched/harness/rollout.hpp"

namespace gridsched::harness {

namespace detail {
inline std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(17);
    return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}
} // namespace detail

inline void write_trace_csv(const std::filesystem::path& path, const std::vector<env::TraceRow>& trace) {
    auto out = detail::open_for_write(path);
    out << "t,day,hour,buy_price,sell_price,net_load,action,ess_requested,ev_requested,ess_executed,ev_executed,"
           "ess_violation,ev_violation,ess_to_build,ess_to_grid,ev_to_build,ev_to_grid,grid_to_ess,grid_to_ev,"
           "pv_surplus_sold,grid_purchase,revenue,energy_cost,reward_discharge,reward_charge,reward_ess_deg,"
           "reward_ev_deg,reward_penalty,reward_total,soc_ess,soc_ev,ev_online,ess_cycle_cost,ev_cycle_cost,"
           "ess_calendar_cost,ev_calendar_cost,departure_violation,latency_ms\n";
    for (const auto& r : trace) {
        const auto& a = r.alloc;
        const auto& w = r.reward;
        out << r.t << ',' << r.day << ',' << r.hour << ',' << r.buy_price << ',' << r.sell_price << ',' << r.net_load << ','
            << r.action << ',' << r.ess_requested << ',' << r.ev_requested << ',' << r.ess_executed << ',' << r.ev_executed
            << ',' << r.ess_violation << ',' << r.ev_violation << ',' << a.ess_to_build << ',' << a.ess_to_grid << ','
            << a.ev_to_build << ',' << a.ev_to_grid << ',' << a.grid_to_ess << ',' << a.grid_to_ev << ','
            << a.pv_surplus_sold << ',' << a.grid_purchase << ',' << r.revenue << ',' << r.energy_cost << ','
            << w.discharge_term << ',' << w.charge_term << ',' << w.ess_deg_term << ',' << w.ev_deg_term << ','
            << w.soc_penalty_term << ',' << w.total << ',' << r.soc_ess << ',' << r.soc_ev << ',' << (r.ev_online ? 1 : 0)
            << ',' << r.ess_cycle_cost << ',' << r.ev_cycle_cost << ',' << r.ess_calendar_cost << ','
            << r.ev_calendar_cost << ',' << (r.departure_violation ? 1 : 0) << ',' << r.latency_ms << '\n';
    }
    detail::finish(out, path);
}

/// Run summary. Everything outside "timing" is deterministic per configuration.
inline nlohmann::json to_json(const RunSummary& s) {
    return {{"policy", s.policy},
            {"first_day", s.first_day},
            {"days", s.days},
            {"operating_cost", s.operating_cost},
            {"revenue", s.revenue},
            {"energy_cost", s.energy_cost},
            {"building_cost", s.building_cost},
            {"ev_user_cost", s.ev_user_cost},
            {"ess_cycle_cost", s.ess_cycle_cost},
            {"ev_cycle_cost", s.ev_cycle_cost},
            {"ess_calendar_cost", s.ess_calendar_cost},
            {"ev_calendar_cost", s.ev_calendar_cost},
            {"ess_throughput_kwh", s.ess_throughput_kwh},
            {"ev_throughput_kwh", s.ev_throughput_kwh},
            {"ess_scheduling_cost", s.ess_scheduling_cost},
            {"ev_scheduling_cost", s.ev_scheduling_cost},
            {"frozen_objective", s.frozen_objective},
            {"ess_soh", s.ess_soh},
            {"ev_soh", s.ev_soh},
            {"departure_violations", s.departure_violations},
            {"timing",
             {{"mean_latency_ms", s.mean_latency_ms}, {"max_latency_ms", s.max_latency_ms}, {"wall_clock_s", s.wall_clock_s}}}};
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
    try {
        RunSummary s;
        s.policy = j.at("policy").get<std::string>();
        s.first_day = j.at("first_day").get<std::size_t>();
        s.days = j.at("days").get<std::size_t>();
        s.operating_cost = j.at("operating_cost").get<double>();
        s.revenue = j.at("revenue").get<double>();
        s.energy_cost = j.at("energy_cost").get<double>();
        s.building_cost = j.at("building_cost").get<double>();
        s.ev_user_cost = j.at("ev_user_cost").get<double>();
        s.ess_cycle_cost = j.at("ess_cycle_cost").get<double>();
        s.ev_cycle_cost = j.at("ev_cycle_cost").get<double>();
        s.ess_calendar_cost = j.at("ess_calendar_cost").get<double>();
        s.ev_calendar_cost = j.at("ev_calendar_cost").get<double>();
        s.ess_throughput_kwh = j.at("ess_throughput_kwh").get<double>();
        s.ev_throughput_kwh = j.at("ev_throughput_kwh").get<double>();
        s.ess_scheduling_cost = j.at("ess_scheduling_cost").get<double>();
        s.ev_scheduling_cost = j.at("ev_scheduling_cost").get<double>();
        s.frozen_objective = j.at("frozen_objective").get<double>();
        s.ess_soh = j.at("ess_soh").get<double>();
        s.ev_soh = j.at("ev_soh").get<double>();
        s.departure_violations = j.at("departure_violations").get<int>();
        const auto& timing = j.at("timing");
        s.mean_latency_ms = timing.at("mean_latency_ms").get<double>();
        s.max_latency_ms = timing.at("max_latency_ms").get<double>();
        s.wall_clock_s = timing.at("wall_clock_s").get<double>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("malformed run summary: ") + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = detail::open_for_write(path);
    out << j.dump(2) << '\n';
    detail::finish(out, path);
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigUnreadable("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(path.string() + " is not valid JSON: " + e.what());
    }
}

inline void write_summary_json(const std::filesystem::path& path, const RunSummary& s) { write_json(path, to_json(s)); }
inline RunSummary read_summary_json(const std::filesystem::path& path) { return summary_from_json(read_json(path)); }

inline void write_learning_curve_csv(const std::filesystem::path& path, const std::vector<EpisodeLog>& curve) {
    auto out = detail::open_for_write(path);
    out << "episode,day,reward,operating_cost,epsilon,mean_loss,ess_throughput_kwh,ev_throughput_kwh,ess_soh,ev_soh,"
           "alpha_ess,alpha_ev,target_synced\n";
    for (const auto& l : curve) {
        out << l.episode << ',' << l.day << ',' << l.reward << ',' << l.operating_cost << ',' << l.epsilon << ','
            << l.mean_loss << ',' << l.ess_throughput_kwh << ',' << l.ev_throughput_kwh << ',' << l.ess_soh << ','
            << l.ev_soh << ',' << l.outcome.coefficients_after.alpha_ess << ',' << l.outcome.coefficients_after.alpha_ev
            << ',' << (l.target_synced ? 1 : 0) << '\n';
    }
    detail::finish(out, path);
}

/// Per-episode aging of both devices.
inline void write_degradation_csv(const std::filesystem::path& path, const std::vector<env::EpisodeOutcome>& episodes) {
    auto out = detail::open_for_write(path);
    out << "episode,day,device,delta_q_cycle,delta_q_cal,soh,alpha,equivalent_cycles,replaced,throughput_kwh,"
           "cycle_cost,calendar_cost\n";
    for (std::size_t k = 0; k < episodes.size(); ++k) {
        const auto& e = episodes[k];
        out << k + 1 << ',' << e.day << ",ess," << e.ess_aging.delta_q_cycle << ',' << e.ess_aging.delta_q_cal << ','
            << e.ess_aging.soh_after << ',' << e.coefficients_after.alpha_ess << ',' << e.ess_aging.equivalent_cycles << ','
            << (e.ess_aging.replaced ? 1 : 0) << ',' << e.ess_throughput_kwh << ',' << e.ess_cycle_cost << ','
            << e.ess_calendar_cost << '\n';
        out << k + 1 << ',' << e.day << ",ev," << e.ev_aging.delta_q_cycle << ',' << e.ev_aging.delta_q_cal << ','
            << e.ev_aging.soh_after << ',' << e.coefficients_after.alpha_ev << ',' << e.ev_aging.equivalent_cycles << ','
            << (e.ev_aging.replaced ? 1 : 0) << ',' << e.ev_throughput_kwh << ',' << e.ev_cycle_cost << ','
            << e.ev_calendar_cost << '\n';
    }
    detail::finish(out, path);
}

/// Relative difference of another run against the proposed one.
inline double percent_difference(double other, double proposed) {
    if (proposed == 0.0) throw InvalidArgument("proposed cost is zero; percentage undefined");
    return 100.0 * (other - proposed) / proposed;
}

/// One row per run, with cost deltas relative to `proposed`.
inline void write_comparison_csv(const std::filesystem::path& path, const RunSummary& proposed,
                                 const std::vector<RunSummary>& runs) {
    auto out = detail::open_for_write(path);
    out << "policy,operating_cost,energy_cost,revenue,building_cost,ev_user_cost,ess_throughput_kwh,ev_throughput_kwh,"
           "frozen_objective,delta_cost,percent_vs_proposed\n";
    for (const auto& r : runs) {
        out << r.policy << ',' << r.operating_cost << ',' << r.energy_cost << ',' << r.revenue << ',' << r.building_cost
            << ',' << r.ev_user_cost << ',' << r.ess_throughput_kwh << ',' << r.ev_throughput_kwh << ','
            << r.frozen_objective << ',' << r.operating_cost - proposed.operating_cost << ','
            << percent_difference(r.operating_cost, proposed.operating_cost) << '\n';
    }
    detail::finish(out, path);
}

} // namespace gridsched::harness
