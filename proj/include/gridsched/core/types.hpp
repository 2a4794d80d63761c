#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gridsched/error.hpp"

namespace gridsched::core {

inline constexpr std::size_t kHoursPerDay = 24;

enum class Chemistry { LFP, NMC };

inline std::string_view to_string(Chemistry c) { return c == Chemistry::LFP ? "LFP" : "NMC"; }

inline Chemistry chemistry_from_string(std::string_view s) {
    if (s == "LFP" || s == "lfp") return Chemistry::LFP;
    if (s == "NMC" || s == "nmc") return Chemistry::NMC;
    throw InvalidArgument("unknown chemistry '" + std::string(s) + "' (expected LFP or NMC)");
}

struct PowerBounds {
    double min = 0.0;
    double max = 100.0;
};

struct SocBounds {
    double min = 0.1;
    double max = 0.9;

    [[nodiscard]] bool contains(double soc, double tol = 1e-12) const {
        return soc >= min - tol && soc <= max + tol;
    }
    [[nodiscard]] double clamp(double soc) const { return std::clamp(soc, min, max); }
};

/// Electrical and economic description of one storage device (the ESS or
/// the aggregated EV fleet).
struct BatterySpec {
    double capacity_kwh = 1000.0;
    PowerBounds charge_power{};
    PowerBounds discharge_power{};
    double charge_eff = 0.95;
    double discharge_eff = 0.95;
    SocBounds soc{};
    double cost_per_kwh = 910.0;
    Chemistry chemistry = Chemistry::LFP;

    void validate() const {
        if (!(capacity_kwh > 0.0)) throw InvalidArgument("battery capacity must be positive");
        for (const auto& b : {charge_power, discharge_power}) {
            if (b.min < 0.0 || b.max < 0.0 || b.min > b.max)
                throw InvalidArgument("power bounds must be nonnegative with min <= max");
        }
        if (!(charge_eff > 0.0 && charge_eff <= 1.0) || !(discharge_eff > 0.0 && discharge_eff <= 1.0))
            throw InvalidArgument("efficiencies must lie in (0, 1]");
        if (!(soc.min >= 0.0 && soc.min < soc.max && soc.max <= 1.0))
            throw InvalidArgument("soc bounds must satisfy 0 <= min < max <= 1");
        if (!(cost_per_kwh >= 0.0)) throw InvalidArgument("cost per kWh must be nonnegative");
    }
};

/// Five 200 kWh LFP packs.
inline BatterySpec default_ess_spec() {
    BatterySpec s;
    s.capacity_kwh = 1000.0;
    s.cost_per_kwh = 910.0;
    s.chemistry = Chemistry::LFP;
    return s;
}

/// Ten 100 kWh NMC vehicles treated as one equivalent battery.
inline BatterySpec default_ev_fleet_spec(int fleet_size = 10, double per_vehicle_kwh = 100.0) {
    BatterySpec s;
    s.capacity_kwh = fleet_size * per_vehicle_kwh;
    s.cost_per_kwh = 1092.0;
    s.chemistry = Chemistry::NMC;
    return s;
}

/// Day-ahead time-of-use tariff. Sell price is a fixed fraction of the buy price.
struct TariffSchedule {
    std::array<double, kHoursPerDay> buy_price{};
    double price_coefficient = 0.9;

    [[nodiscard]] double buy(std::size_t hour) const { return buy_price[hour % kHoursPerDay]; }
    [[nodiscard]] double sell(std::size_t hour) const { return price_coefficient * buy(hour); }

    [[nodiscard]] double daily_average() const {
        double s = 0.0;
        for (double p : buy_price) s += p;
        return s / static_cast<double>(kHoursPerDay);
    }
    [[nodiscard]] double daily_max() const { return *std::max_element(buy_price.begin(), buy_price.end()); }

    void validate() const {
        for (double p : buy_price)
            if (!(p > 0.0)) throw InvalidArgument("all buy prices must be positive");
        if (!(price_coefficient > 0.0 && price_coefficient < 1.0))
            throw InvalidArgument("price coefficient must lie in (0, 1)");
    }
};

/// Hourly building load and PV output.
struct EnergyProfile {
    std::vector<double> load;
    std::vector<double> pv;
    double pv_min = 0.0;
    double pv_max = 1e9;

    [[nodiscard]] std::size_t horizon() const { return load.size(); }
    [[nodiscard]] std::size_t days() const { return load.size() / kHoursPerDay; }

    void validate() const {
        if (load.size() != pv.size()) throw InvalidArgument("load and pv series differ in length");
        if (load.empty() || load.size() % kHoursPerDay != 0)
            throw InvalidArgument("profile horizon must be a positive multiple of 24 hours");
        for (double l : load)
            if (!(l >= 0.0)) throw InvalidArgument("load must be nonnegative");
        for (double p : pv)
            if (!(p >= pv_min && p <= pv_max)) throw InvalidArgument("pv outside [pv_min, pv_max]");
    }
};

/// Daily parking window of the EV fleet, in hour-of-day.
struct EvSessionWindow {
    int arrival_hour = 8;
    int departure_hour = 18;
    int fleet_size = 10;
    double arrival_soc_mean = 0.35;
    double arrival_soc_std = 0.1;

    /// True while the fleet is connected: hour in [arrival, departure).
    [[nodiscard]] bool online(std::size_t hour_of_day) const {
        const auto h = static_cast<int>(hour_of_day % kHoursPerDay);
        return h >= arrival_hour && h < departure_hour;
    }
    [[nodiscard]] int hours_to_departure(std::size_t hour_of_day) const {
        return departure_hour - static_cast<int>(hour_of_day % kHoursPerDay);
    }
    [[nodiscard]] int online_hours() const { return departure_hour - arrival_hour; }

    void validate() const {
        if (arrival_hour < 0 || departure_hour > static_cast<int>(kHoursPerDay) || arrival_hour >= departure_hour)
            throw InvalidArgument("EV window needs 0 <= arrival < departure <= 24");
        if (fleet_size < 1) throw InvalidArgument("fleet size must be at least 1");
        if (arrival_soc_std < 0.0) throw InvalidArgument("arrival soc std must be nonnegative");
    }
};

} // namespace gridsched::core
