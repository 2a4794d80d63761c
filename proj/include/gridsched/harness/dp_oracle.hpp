#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "gridsched/core/allocation.hpp"
#include "gridsched/core/dynamics.hpp"
#include "gridsched/degradation/aging.hpp"
#include "gridsched/env/environment.hpp"
#include "gridsched/error.hpp"
#include "gridsched/harness/rollout.hpp"

namespace gridsched::harness {

struct DpOptions {
    double grid_step = 0.05;
    degradation::DegradationCoefficients alpha{}; ///< frozen aging prices
    std::size_t first_day = 0;
    std::size_t days = 1;
    std::size_t hours = 0; ///< 0 means days * 24
};

/// Uniform SoC grid covering the device bounds exactly.
inline std::vector<double> soc_grid(const core::SocBounds& b, double h) {
    if (!(h > 0.0)) throw InvalidArgument("grid step must be positive");
    const double lo = b.min / h, hi = b.max / h;
    if (std::abs(lo - std::round(lo)) > 1e-9 || std::abs(hi - std::round(hi)) > 1e-9)
        throw InvalidArgument("grid step cannot represent the SoC bounds exactly");
    std::vector<double> g;
    for (long k = std::lround(lo); k <= std::lround(hi); ++k) g.push_back(static_cast<double>(k) * h);
    return g;
}

struct DpTransition {
    double cost = 0.0;
    double next_ess = 0.0;
    double next_ev = 0.0;
};

/// Perfect-foresight backward induction over (hour, ESS SoC, EV SoC). Step
/// cost is energy cost minus revenue plus cycle aging at frozen prices;
/// values between grid points are bilinear. Calendar aging is not part of
/// the objective and leftover energy has no terminal value.
class DpOracle {
public:
    DpOracle(const env::Scenario& scenario, DpOptions opt) : sc_(&scenario), opt_(opt) {
        scenario.validate();
        if (opt_.hours == 0) opt_.hours = opt_.days * core::kHoursPerDay;
        if ((opt_.first_day * core::kHoursPerDay + opt_.hours) > scenario.profile.horizon())
            throw InvalidArgument("oracle horizon extends past the scenario");
        ess_grid_ = soc_grid(scenario.ess.soc, opt_.grid_step);
        ev_grid_ = soc_grid(scenario.ev.soc, opt_.grid_step);
    }

    [[nodiscard]] std::size_t stages() const { return opt_.hours; }
    [[nodiscard]] const DpOptions& options() const { return opt_; }

    /// Cost and next state of one action from a continuous state at a stage.
    [[nodiscard]] DpTransition transition(std::size_t stage, double soc_ess, double soc_ev, std::size_t action) const {
        const std::size_t t = first_hour() + stage;
        const std::size_t h = t % core::kHoursPerDay;
        const std::size_t day = t / core::kHoursPerDay;
        const bool online = sc_->ev_window.online(h);
        const auto req = actions_.decode(action);
        const auto ess = core::clip_action_to_feasible(soc_ess, req.ess_kw, sc_->ess);
        const auto ev = online ? core::clip_action_to_feasible(soc_ev, req.ev_kw, sc_->ev) : core::ClippedAction{};
        const auto flows = core::make_power_flows(sc_->net_load(t), ess.executed_kw, ev.executed_kw);
        const auto cash = core::step_cashflow(flows.alloc, sc_->tariff, h, flows.cbs_charge());
        const auto cyc = degradation::step_cycle_cost(opt_.alpha, ess.executed_kw, ev.executed_kw);
        DpTransition tr;
        tr.cost = cash.energy_cost - cash.revenue + cyc.ess + cyc.ev;
        tr.next_ess = core::apply_power(soc_ess, ess.executed_kw, sc_->ess);
        tr.next_ev = online ? core::apply_power(soc_ev, ev.executed_kw, sc_->ev) : soc_ev;
        const std::size_t next_h = (h + 1) % core::kHoursPerDay;
        const std::size_t next_day = h + 1 == core::kHoursPerDay ? day + 1 : day;
        if (static_cast<int>(next_h) == sc_->ev_window.arrival_hour && next_day < sc_->days())
            tr.next_ev = sc_->arrival_soc[next_day];
        return tr;
    }

    [[nodiscard]] env::ActionMask mask(std::size_t stage, double soc_ev) const {
        const std::size_t t = first_hour() + stage;
        const std::size_t h = t % core::kHoursPerDay;
        if (!sc_->ev_window.online(h)) return env::full_mask();
        return env::joint_mask(env::departure_guard(soc_ev, sc_->arrival_soc[t / core::kHoursPerDay],
                                                    sc_->ev_window.hours_to_departure(h), sc_->ev, actions_));
    }

    void solve() {
        const std::size_t ne = ess_grid_.size(), nv = ev_grid_.size();
        values_.assign(stages() + 1, std::vector<double>(ne * nv, 0.0));
        for (std::size_t k = stages(); k-- > 0;) {
            for (std::size_t i = 0; i < ne; ++i)
                for (std::size_t j = 0; j < nv; ++j) values_[k][i * nv + j] = best(k, ess_grid_[i], ev_grid_[j]).second;
        }
        solved_ = true;
    }

    /// Cost-to-go from a continuous state, interpolated on the grid.
    [[nodiscard]] double value(std::size_t stage, double soc_ess, double soc_ev) const {
        require_solved();
        return interpolate(values_[stage], soc_ess, soc_ev);
    }

    /// Greedy action against the solved cost-to-go.
    [[nodiscard]] std::size_t best_action(std::size_t stage, double soc_ess, double soc_ev) const {
        require_solved();
        return best(stage, soc_ess, soc_ev).first;
    }

    /// Cost-to-go at the start of the horizon for the scenario's initial state.
    [[nodiscard]] double optimal_cost(double soc_ess0) const {
        const std::size_t h0 = first_hour() % core::kHoursPerDay;
        const double ev0 = static_cast<int>(h0) == sc_->ev_window.arrival_hour ? sc_->arrival_soc[opt_.first_day] : 0.0;
        return value(0, soc_ess0, ev0);
    }

    /// Forward rollout through a frozen-price environment.
    [[nodiscard]] Policy policy() const {
        require_solved();
        return [this](const env::MicrogridEnv& e) {
            return best_action(e.global_hour() - first_hour(), e.soc_ess(), e.soc_ev());
        };
    }

    RunResult run(const forecast::HorizonTable& forecasts) const {
        env::EnvConfig cfg;
        cfg.freeze_coefficients = true;
        env::MicrogridEnv e(*sc_, forecasts, cfg);
        e.reset_aging();
        e.set_coefficients(opt_.alpha);
        e.set_soc_ess(sc_->initial_ess_soc);
        auto r = rollout(e, opt_.first_day, opt_.hours / core::kHoursPerDay, policy(), "dp_oracle");
        r.summary.frozen_objective = summarize_trace(r.trace, opt_.alpha).frozen_objective;
        return r;
    }

private:
    [[nodiscard]] std::size_t first_hour() const { return opt_.first_day * core::kHoursPerDay; }

    void require_solved() const {
        if (!solved_) throw InvalidArgument("oracle has not been solved");
    }

    [[nodiscard]] std::pair<std::size_t, double> best(std::size_t stage, double soc_ess, double soc_ev) const {
        const auto m = mask(stage, soc_ev);
        std::size_t best_a = 0;
        double best_v = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < env::kActionCount; ++a) {
            if (!m[a]) continue;
            const auto tr = transition(stage, soc_ess, soc_ev, a);
            const double v = tr.cost + (stage + 1 < values_.size() ? interpolate(values_[stage + 1], tr.next_ess, tr.next_ev) : 0.0);
            if (v < best_v - 1e-12) {
                best_v = v;
                best_a = a;
            }
        }
        return {best_a, best_v};
    }

    [[nodiscard]] double interpolate(const std::vector<double>& v, double soc_ess, double soc_ev) const {
        const std::size_t nv = ev_grid_.size();
        auto locate = [this](const std::vector<double>& g, double x) {
            x = std::clamp(x, g.front(), g.back());
            const double pos = (x - g.front()) / opt_.grid_step;
            auto i = static_cast<std::size_t>(std::floor(pos));
            if (i + 1 >= g.size()) i = g.size() - 2;
            return std::pair<std::size_t, double>{i, std::clamp(pos - static_cast<double>(i), 0.0, 1.0)};
        };
        const auto [i, fi] = locate(ess_grid_, soc_ess);
        const auto [j, fj] = locate(ev_grid_, soc_ev);
        const double v00 = v[i * nv + j], v01 = v[i * nv + j + 1], v10 = v[(i + 1) * nv + j], v11 = v[(i + 1) * nv + j + 1];
        return (1 - fi) * ((1 - fj) * v00 + fj * v01) + fi * ((1 - fj) * v10 + fj * v11);
    }

    const env::Scenario* sc_;
    DpOptions opt_;
    env::ActionTable actions_{};
    std::vector<double> ess_grid_;
    std::vector<double> ev_grid_;
    std::vector<std::vector<double>> values_;
    bool solved_ = false;
};

} // namespace gridsched::harness
