#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

#include "gridsched/core/types.hpp"
#include "gridsched/error.hpp"

namespace gridsched::env {

inline constexpr std::size_t kStateDim = 51;
inline constexpr std::size_t kActionCount = 25;
inline constexpr std::size_t kLevelsPerDevice = 5;
inline constexpr std::array<double, kLevelsPerDevice> kDefaultLevels{-100.0, -50.0, 0.0, 50.0, 100.0};

/// Joint action decoding: index i maps to (levels[i / 5], levels[i % 5]).
struct ActionTable {
    std::array<double, kLevelsPerDevice> levels = kDefaultLevels;

    struct Pair {
        double ess_kw;
        double ev_kw;
    };

    [[nodiscard]] Pair decode(std::size_t i) const {
        if (i >= kActionCount) throw InvalidArgument("action index out of range");
        return {levels[i / kLevelsPerDevice], levels[i % kLevelsPerDevice]};
    }
    [[nodiscard]] static std::size_t encode(std::size_t ess_level, std::size_t ev_level) {
        if (ess_level >= kLevelsPerDevice || ev_level >= kLevelsPerDevice) throw InvalidArgument("level index out of range");
        return ess_level * kLevelsPerDevice + ev_level;
    }
    [[nodiscard]] static std::size_t ess_level(std::size_t i) { return i / kLevelsPerDevice; }
    [[nodiscard]] static std::size_t ev_level(std::size_t i) { return i % kLevelsPerDevice; }
    [[nodiscard]] std::size_t idle_level() const {
        return static_cast<std::size_t>(std::find(levels.begin(), levels.end(), 0.0) - levels.begin());
    }
    [[nodiscard]] std::size_t max_charge_level() const {
        return static_cast<std::size_t>(std::min_element(levels.begin(), levels.end()) - levels.begin());
    }
};

using ActionMask = std::array<bool, kActionCount>;

inline ActionMask full_mask() {
    ActionMask m;
    m.fill(true);
    return m;
}

/// Raw observation: prices from the current hour on, current and forecast
/// net load, EV availability, SoCs.
struct EnvState {
    std::array<double, kStateDim> values{};

    static constexpr std::size_t kPriceOffset = 0;
    static constexpr std::size_t kNetOffset = 24;
    static constexpr std::size_t kFlagIndex = 48;
    static constexpr std::size_t kSocEssIndex = 49;
    static constexpr std::size_t kSocEvIndex = 50;

    [[nodiscard]] bool ev_online() const { return values[kFlagIndex] != 0.0; }
    [[nodiscard]] double soc_ess() const { return values[kSocEssIndex]; }
    [[nodiscard]] double soc_ev() const { return values[kSocEvIndex]; }
};

inline EnvState build_state(std::size_t hour_of_day, const core::TariffSchedule& tariff, double net_now,
                            std::span<const double> forecast_next, const core::EvSessionWindow& window,
                            double soc_ess, double soc_ev) {
    if (forecast_next.size() < 23) throw InvalidArgument("state needs 23 forecast net-load values");
    EnvState s;
    for (std::size_t k = 0; k < core::kHoursPerDay; ++k) s.values[EnvState::kPriceOffset + k] = tariff.buy(hour_of_day + k);
    s.values[EnvState::kNetOffset] = net_now;
    for (std::size_t k = 0; k < 23; ++k) s.values[EnvState::kNetOffset + 1 + k] = forecast_next[k];
    const bool online = window.online(hour_of_day);
    s.values[EnvState::kFlagIndex] = online ? 1.0 : 0.0;
    s.values[EnvState::kSocEssIndex] = soc_ess;
    s.values[EnvState::kSocEvIndex] = online ? soc_ev : 0.0;
    return s;
}

/// Network input: prices over the day's maximum, net loads over a rolling
/// magnitude scale, flag and SoCs unchanged.
inline std::array<double, kStateDim> normalize_features(const EnvState& s, double price_scale, double net_scale) {
    if (!(price_scale > 0.0) || !(net_scale > 0.0)) throw InvalidArgument("feature scales must be positive");
    auto f = s.values;
    for (std::size_t k = 0; k < 24; ++k) f[EnvState::kPriceOffset + k] /= price_scale;
    for (std::size_t k = 0; k < 24; ++k) f[EnvState::kNetOffset + k] /= net_scale;
    return f;
}

} // namespace gridsched::env
