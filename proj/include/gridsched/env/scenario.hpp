#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "gridsched/core/types.hpp"
#include "gridsched/degradation/chemistry.hpp"
#include "gridsched/error.hpp"

namespace gridsched::env {

/// The world an environment runs in.
struct Scenario {
    core::EnergyProfile profile{};
    core::TariffSchedule tariff{};
    core::EvSessionWindow ev_window{};
    core::BatterySpec ess = core::default_ess_spec();
    core::BatterySpec ev = core::default_ev_fleet_spec();
    degradation::ChemistryParams ess_chemistry = degradation::lfp_params();
    degradation::ChemistryParams ev_chemistry = degradation::nmc_params();
    double temperature_k = degradation::kDefaultTemperatureK;
    double initial_ess_soc = 0.5;
    std::vector<double> arrival_soc; ///< aggregate fleet SoC at arrival, one per day

    [[nodiscard]] std::size_t days() const { return profile.days(); }
    [[nodiscard]] double net_load(std::size_t t) const { return profile.load[t] - profile.pv[t]; }

    void validate() const {
        profile.validate();
        tariff.validate();
        ev_window.validate();
        ess.validate();
        ev.validate();
        if (arrival_soc.size() != days()) throw InvalidArgument("need one arrival SoC per scenario day");
        if (!ess.soc.contains(initial_ess_soc)) throw InvalidArgument("initial ESS SoC outside its bounds");
        for (double s : arrival_soc)
            if (!ev.soc.contains(s)) throw InvalidArgument("arrival SoC outside EV bounds");
        if (!(temperature_k > 0.0)) throw InvalidArgument("temperature must be positive kelvin");
    }
};

/// Fleet arrival SoC for each day: the mean over K vehicles, each drawn from
/// the arrival distribution and clipped to the SoC bounds.
inline std::vector<double> sample_arrival_socs(const core::EvSessionWindow& w, const core::SocBounds& bounds,
                                               std::size_t days, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(w.arrival_soc_mean, w.arrival_soc_std);
    std::vector<double> out(days);
    for (auto& s : out) {
        double sum = 0.0;
        for (int k = 0; k < w.fleet_size; ++k) sum += bounds.clamp(w.arrival_soc_std > 0.0 ? dist(rng) : w.arrival_soc_mean);
        s = bounds.clamp(sum / w.fleet_size);
    }
    return out;
}

} // namespace gridsched::env
