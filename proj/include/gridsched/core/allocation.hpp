#pragma once

#include <algorithm>
#include <cmath>

#include "gridsched/core/dynamics.hpp"
#include "gridsched/error.hpp"

namespace gridsched::core {

inline constexpr double kBalanceToleranceKw = 1e-9;

/// Where every kW of discharge, charge, PV surplus and grid purchase goes.
struct AllocationResult {
    double ess_to_build = 0.0;
    double ess_to_grid = 0.0;
    double ev_to_build = 0.0;
    double ev_to_grid = 0.0;
    double grid_to_ess = 0.0;
    double grid_to_ev = 0.0;
    double pv_surplus_sold = 0.0;
    double grid_purchase = 0.0;

    [[nodiscard]] double exported() const { return pv_surplus_sold + ess_to_grid + ev_to_grid; }
    [[nodiscard]] double imported() const { return grid_purchase + grid_to_ess + grid_to_ev; }
};

enum class AllocationBranch {
    AllToBuilding,  ///< net > 0 and CBS discharge <= net
    ProportionalSplit, ///< net > 0 and CBS discharge > net
    AllToGrid,      ///< net <= 0
};

inline AllocationBranch allocation_branch(double net_load, double cbs_discharge) {
    if (net_load <= 0.0) return AllocationBranch::AllToGrid;
    return cbs_discharge <= net_load ? AllocationBranch::AllToBuilding : AllocationBranch::ProportionalSplit;
}

/// Splits CBS discharge between the building and the grid. The building is
/// served first; any surplus is sold in proportion to each device's share of
/// the discharge. Charging always draws from the grid.
inline AllocationResult allocate(double net_load, double ess_discharge, double ev_discharge, double ess_charge,
                                 double ev_charge) {
    if (ess_discharge < 0.0 || ev_discharge < 0.0 || ess_charge < 0.0 || ev_charge < 0.0)
        throw InvalidArgument("allocation powers must be nonnegative");
    AllocationResult r;
    const double cbs = ess_discharge + ev_discharge;
    switch (allocation_branch(net_load, cbs)) {
    case AllocationBranch::AllToBuilding:
        r.ess_to_build = ess_discharge;
        r.ev_to_build = ev_discharge;
        break;
    case AllocationBranch::ProportionalSplit: {
        const double surplus = cbs - net_load;
        r.ess_to_grid = ess_discharge / cbs * surplus;
        r.ev_to_grid = ev_discharge / cbs * surplus;
        r.ess_to_build = ess_discharge - r.ess_to_grid;
        r.ev_to_build = ev_discharge - r.ev_to_grid;
        break;
    }
    case AllocationBranch::AllToGrid:
        r.ess_to_grid = ess_discharge;
        r.ev_to_grid = ev_discharge;
        break;
    }
    r.grid_to_ess = ess_charge;
    r.grid_to_ev = ev_charge;
    r.pv_surplus_sold = std::max(-net_load, 0.0);
    r.grid_purchase = std::max(net_load - r.ess_to_build - r.ev_to_build, 0.0);
    return r;
}

/// Complete power picture of one interval.
struct PowerFlows {
    double net_load = 0.0;
    double ess_charge = 0.0;
    double ess_discharge = 0.0;
    double ev_charge = 0.0;
    double ev_discharge = 0.0;
    AllocationResult alloc{};

    [[nodiscard]] double cbs_charge() const { return ess_charge + ev_charge; }
    [[nodiscard]] double cbs_discharge() const { return ess_discharge + ev_discharge; }
    /// Signed grid exchange, positive when importing.
    [[nodiscard]] double grid_exchange() const { return alloc.imported() - alloc.exported(); }
};

inline PowerFlows make_power_flows(double net_load, double ess_signed_kw, double ev_signed_kw) {
    const auto ess = DevicePower::from_signed(ess_signed_kw);
    const auto ev = DevicePower::from_signed(ev_signed_kw);
    PowerFlows f{net_load, ess.charge, ess.discharge, ev.charge, ev.discharge, {}};
    f.alloc = allocate(net_load, ess.discharge, ev.discharge, ess.charge, ev.charge);
    return f;
}

/// Grid exchange plus CBS discharge must equal net load plus CBS charge, and
/// each device's discharge must be fully accounted between building and grid.
inline bool check_power_balance(const PowerFlows& f, double tol = kBalanceToleranceKw) {
    const auto& a = f.alloc;
    const bool ess_ok = std::abs(a.ess_to_build + a.ess_to_grid - f.ess_discharge) <= tol;
    const bool ev_ok = std::abs(a.ev_to_build + a.ev_to_grid - f.ev_discharge) <= tol;
    const bool charge_ok = std::abs(a.grid_to_ess - f.ess_charge) <= tol && std::abs(a.grid_to_ev - f.ev_charge) <= tol;
    const bool nonneg = a.ess_to_build >= -tol && a.ess_to_grid >= -tol && a.ev_to_build >= -tol &&
                        a.ev_to_grid >= -tol && a.pv_surplus_sold >= -tol && a.grid_purchase >= -tol;
    const double lhs = f.grid_exchange() + f.cbs_discharge();
    const double rhs = f.net_load + f.cbs_charge();
    return ess_ok && ev_ok && charge_ok && nonneg && std::abs(lhs - rhs) <= tol;
}

struct Cashflow {
    double revenue = 0.0;
    double energy_cost = 0.0;
    [[nodiscard]] double net_cost() const { return energy_cost - revenue; }
};

/// Revenue from everything exported and the cost of everything imported.
inline Cashflow step_cashflow(const AllocationResult& a, double buy_price, double sell_price, double cbs_charge_total,
                              double dt_h = 1.0) {
    return {sell_price * (a.pv_surplus_sold + a.ess_to_grid + a.ev_to_grid) * dt_h,
            buy_price * (a.grid_purchase + cbs_charge_total) * dt_h};
}

inline Cashflow step_cashflow(const AllocationResult& a, const TariffSchedule& tariff, std::size_t hour,
                              double cbs_charge_total, double dt_h = 1.0) {
    return step_cashflow(a, tariff.buy(hour), tariff.sell(hour), cbs_charge_total, dt_h);
}

} // namespace gridsched::core
