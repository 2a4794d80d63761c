#pragma once

#include <algorithm>
#include <cmath>

#include "gridsched/error.hpp"

namespace gridsched::env {

struct PriceRatios {
    double price = 1.0; ///< phi_pri
    double net = 1.0;   ///< phi_net
};

inline constexpr double kPriceRatioMin = 0.4;
inline constexpr double kPriceRatioMax = 2.2;
inline constexpr double kNetRatioMin = 0.2;
inline constexpr double kNetRatioMax = 2.4;

inline PriceRatios compute_price_ratios(double buy_now, double daily_avg_price, double net_now, double rolling_avg_net) {
    if (!(daily_avg_price > 0.0) || !(rolling_avg_net > 0.0))
        throw InvalidArgument("price and net-load averages must be positive");
    return {std::clamp(buy_now / daily_avg_price, kPriceRatioMin, kPriceRatioMax),
            std::clamp(net_now / rolling_avg_net, kNetRatioMin, kNetRatioMax)};
}

struct ScalingCoefficients {
    double discharge = 1.0;
    double charge = 1.0;
};

/// Discharge is rewarded above the average price and penalized below it;
/// charge the other way round. The jump at phi_pri == 1 is intentional.
inline ScalingCoefficients scaling_coefficients(double phi_pri, double phi_net) {
    const double m = 0.5 * (phi_pri + phi_net);
    ScalingCoefficients w;
    if (phi_pri > 1.0) {
        w.discharge = std::exp(m - 1.0);
        w.charge = phi_pri;
    } else if (phi_pri < 1.0) {
        w.discharge = phi_pri - 2.0;
        w.charge = -std::exp(1.0 - m);
    }
    return w;
}

struct RewardWeights {
    double theta_ess = 1.0;
    double theta_base = 1.0;
    double theta_scale = 0.916;
    double penalty = 1.0; ///< w_pen
};

struct DegradationWeights {
    double ess = 1.0;
    double ev = 1.0;
};

/// EV aging is weighted up at cheap hours so the fleet is not cycled for
/// small arbitrage gains.
inline DegradationWeights degradation_weights(double phi_pri, const RewardWeights& rw = {}) {
    const double theta_ev = phi_pri <= 1.0 ? rw.theta_ess * (1.0 + 0.5 * std::exp(-rw.theta_scale * phi_pri)) : 1.0;
    return {rw.theta_ess / rw.theta_base, theta_ev / rw.theta_base};
}

struct RewardBreakdown {
    double discharge_term = 0.0;
    double charge_term = 0.0;
    double ess_deg_term = 0.0;
    double ev_deg_term = 0.0;
    double soc_penalty_term = 0.0;
    double total = 0.0;
};

struct RewardInputs {
    double cbs_discharge_kw = 0.0;
    double cbs_charge_kw = 0.0;
    double ess_cycle_cost = 0.0;
    double ev_cycle_cost = 0.0;
    double violation_kw = 0.0; ///< sum over both devices
};

inline RewardBreakdown compute_reward(const RewardInputs& in, const PriceRatios& phi, const RewardWeights& rw = {}) {
    const auto w = scaling_coefficients(phi.price, phi.net);
    const auto d = degradation_weights(phi.price, rw);
    RewardBreakdown r;
    r.discharge_term = w.discharge * in.cbs_discharge_kw;
    r.charge_term = w.charge * in.cbs_charge_kw;
    r.ess_deg_term = d.ess * in.ess_cycle_cost;
    r.ev_deg_term = d.ev * in.ev_cycle_cost;
    r.soc_penalty_term = rw.penalty * in.violation_kw;
    r.total = r.discharge_term - r.charge_term - r.ess_deg_term - r.ev_deg_term - r.soc_penalty_term;
    return r;
}

} // namespace gridsched::env
