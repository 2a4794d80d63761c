#pragma once

#include <algorithm>
#include <cmath>

#include "gridsched/core/types.hpp"
#include "gridsched/error.hpp"

namespace gridsched::core {

/// Signed device power convention used throughout: positive discharges,
/// negative charges.
struct DevicePower {
    double charge = 0.0;    ///< kW drawn into the battery, >= 0
    double discharge = 0.0; ///< kW released by the battery, >= 0

    static DevicePower from_signed(double p) { return p >= 0.0 ? DevicePower{0.0, p} : DevicePower{-p, 0.0}; }
    [[nodiscard]] double signed_power() const { return discharge - charge; }
    [[nodiscard]] double magnitude() const { return charge + discharge; }
};

/// Net load; negative means PV surplus.
inline double compute_net_load(double load_kw, double pv_kw) {
    if (load_kw < 0.0 || pv_kw < 0.0) throw InvalidArgument("load and pv must be nonnegative");
    return load_kw - pv_kw;
}

/// SoC transition for one interval.
///
/// Both efficiencies multiply the power term, so discharging P kW removes
/// eta_dis * P * dt / E from the SoC. This differs from the more common
/// division by eta_dis and is kept on purpose: the round trip through the
/// battery is energy-neutral when eta_ch == eta_dis.
inline double step_soc(double soc, double charge_kw, double discharge_kw, const BatterySpec& spec, double dt_h = 1.0) {
    if (charge_kw < 0.0 || discharge_kw < 0.0) throw InvalidArgument("charge and discharge powers must be nonnegative");
    if (charge_kw > 0.0 && discharge_kw > 0.0)
        throw MutualExclusionViolation("battery cannot charge and discharge in the same interval");
    return soc + spec.charge_eff * charge_kw * dt_h / spec.capacity_kwh -
           spec.discharge_eff * discharge_kw * dt_h / spec.capacity_kwh;
}

struct ClippedAction {
    double executed_kw = 0.0;  ///< signed, same sign as the request
    double violation_kw = 0.0; ///< |requested| - |executed|
};

/// Largest same-sign power that keeps the SoC inside its bounds after one
/// interval. The shortfall is returned so it can be penalized.
inline ClippedAction clip_action_to_feasible(double soc, double requested_kw, const BatterySpec& spec, double dt_h = 1.0) {
    if (requested_kw == 0.0) return {};
    const double magnitude = std::abs(requested_kw);
    double headroom = 0.0;
    if (requested_kw > 0.0) {
        headroom = (soc - spec.soc.min) * spec.capacity_kwh / (spec.discharge_eff * dt_h);
        headroom = std::min(headroom, spec.discharge_power.max);
    } else {
        headroom = (spec.soc.max - soc) * spec.capacity_kwh / (spec.charge_eff * dt_h);
        headroom = std::min(headroom, spec.charge_power.max);
    }
    headroom = std::max(headroom, 0.0);
    const double executed = std::min(magnitude, headroom);
    return {std::copysign(executed, requested_kw), magnitude - executed};
}

/// Applies a signed power and returns the new SoC pinned to the bounds.
/// Pinning only removes floating-point overshoot left by clipping.
inline double apply_power(double soc, double signed_kw, const BatterySpec& spec, double dt_h = 1.0) {
    const auto p = DevicePower::from_signed(signed_kw);
    const double next = step_soc(soc, p.charge, p.discharge, spec, dt_h);
    return std::clamp(next, std::min(spec.soc.min, soc), std::max(spec.soc.max, soc));
}

} // namespace gridsched::core
