#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gridsched/core/allocation.hpp"
#include "gridsched/core/dynamics.hpp"
#include "gridsched/degradation/aging.hpp"
#include "gridsched/env/reward.hpp"
#include "gridsched/env/scenario.hpp"
#include "gridsched/env/state.hpp"
#include "gridsched/error.hpp"
#include "gridsched/forecast/forecaster.hpp"

namespace gridsched::env {

inline constexpr double kGuardTolerance = 1e-9;

using LevelMask = std::array<bool, kLevelsPerDevice>;

/// EV levels that still leave enough max-power charging time to restore the
/// arrival SoC by departure. If none qualifies, only the max-charge level is
/// allowed.
inline LevelMask departure_guard(double soc_ev, double arrival_soc, int hours_to_departure, const core::BatterySpec& spec,
                                 const ActionTable& actions = {}, double dt_h = 1.0) {
    LevelMask ok{};
    bool any = false;
    const int remaining = hours_to_departure - 1;
    for (std::size_t l = 0; l < kLevelsPerDevice; ++l) {
        const auto c = core::clip_action_to_feasible(soc_ev, actions.levels[l], spec, dt_h);
        const double next = core::apply_power(soc_ev, c.executed_kw, spec, dt_h);
        const double reachable =
            std::min(next + remaining * spec.charge_eff * spec.charge_power.max * dt_h / spec.capacity_kwh, spec.soc.max);
        ok[l] = reachable >= arrival_soc - kGuardTolerance;
        any = any || ok[l];
    }
    if (!any) ok[actions.max_charge_level()] = true;
    return ok;
}

/// Joint mask from an EV level mask; ESS levels are always allowed because
/// clipping keeps them physical.
inline ActionMask joint_mask(const LevelMask& ev_ok) {
    ActionMask m{};
    for (std::size_t i = 0; i < kActionCount; ++i) m[i] = ev_ok[ActionTable::ev_level(i)];
    return m;
}

struct EnvConfig {
    RewardWeights reward{};
    bool degradation_blind = false;   ///< drop cycle costs from the reward only
    bool freeze_coefficients = false; ///< keep the aging prices fixed
    bool departure_guard = true;
    double dt_h = 1.0;
};

/// One executed step.
struct TraceRow {
    std::size_t t = 0; ///< hour index in the scenario
    std::size_t day = 0;
    std::size_t hour = 0;
    double buy_price = 0.0;
    double sell_price = 0.0;
    double net_load = 0.0;
    std::size_t action = 0;
    double ess_requested = 0.0;
    double ev_requested = 0.0;
    double ess_executed = 0.0;
    double ev_executed = 0.0;
    double ess_violation = 0.0;
    double ev_violation = 0.0;
    core::AllocationResult alloc{};
    double revenue = 0.0;
    double energy_cost = 0.0;
    RewardBreakdown reward{};
    double soc_ess = 0.0; ///< after the step
    double soc_ev = 0.0;  ///< after the step, 0 when offline
    bool ev_online = false;
    double ess_cycle_cost = 0.0;
    double ev_cycle_cost = 0.0;
    double ess_calendar_cost = 0.0; ///< nonzero on the last step of a day
    double ev_calendar_cost = 0.0;
    bool departure_violation = false;
    double latency_ms = 0.0;

    /// Everything this step adds to the operating cost.
    [[nodiscard]] double total_cost() const {
        return energy_cost - revenue + ess_cycle_cost + ev_cycle_cost + ess_calendar_cost + ev_calendar_cost;
    }
};

struct EpisodeOutcome {
    std::size_t day = 0;
    degradation::EpisodeAging ess_aging{};
    degradation::EpisodeAging ev_aging{};
    double ess_calendar_cost = 0.0;
    double ev_calendar_cost = 0.0;
    double ess_cycle_cost = 0.0;
    double ev_cycle_cost = 0.0;
    double ess_throughput_kwh = 0.0;
    double ev_throughput_kwh = 0.0;
    double revenue = 0.0;
    double energy_cost = 0.0;
    double reward = 0.0;
    degradation::DegradationCoefficients coefficients_used{};
    degradation::DegradationCoefficients coefficients_after{};
    double ev_arrival_soc = 0.0;
    double ev_departure_soc = 0.0;
    bool departure_violation = false;
};

struct StepResult {
    const EnvState* next_state = nullptr;
    RewardBreakdown reward{};
    TraceRow row{};
    bool done = false;
};

/// One-day-per-episode microgrid MDP. The scenario and forecast table are
/// borrowed and must outlive the environment. ESS SoC and both aging ledgers
/// persist across episodes.
class MicrogridEnv {
public:
    MicrogridEnv(const Scenario& scenario, const forecast::HorizonTable& forecasts, EnvConfig cfg = {})
        : sc_(&scenario), fc_(&forecasts), cfg_(cfg), soc_ess_(scenario.initial_ess_soc) {
        scenario.validate();
        if (forecasts.size() != scenario.profile.horizon()) throw InvalidArgument("forecast table does not cover the scenario");
        precompute_net_statistics();
    }

    const EnvState& reset(std::size_t day) {
        if (day >= sc_->days()) throw InvalidArgument("day outside the scenario");
        day_ = day;
        hour_ = 0;
        ess_profile_.assign(1, soc_ess_);
        ev_profile_.clear();
        episode_ = EpisodeOutcome{};
        episode_.day = day;
        episode_.coefficients_used = coeffs_;
        episode_.ev_arrival_soc = sc_->arrival_soc[day];
        soc_ev_ = 0.0;
        maybe_arrive();
        rebuild_state();
        in_episode_ = true;
        return state_;
    }

    [[nodiscard]] const EnvState& state() const { return state_; }
    [[nodiscard]] std::size_t day() const { return day_; }
    [[nodiscard]] std::size_t hour() const { return hour_; }
    [[nodiscard]] std::size_t global_hour() const { return day_ * core::kHoursPerDay + hour_; }
    [[nodiscard]] const Scenario& scenario() const { return *sc_; }
    [[nodiscard]] const EnvConfig& config() const { return cfg_; }
    [[nodiscard]] const ActionTable& actions() const { return actions_; }

    /// Network input for the current state.
    [[nodiscard]] std::array<double, kStateDim> features() const {
        return normalize_features(state_, sc_->tariff.daily_max(), net_scale_[std::min(global_hour(), net_scale_.size() - 1)]);
    }

    /// Feasible joint actions. ESS levels are always allowed (clipping keeps
    /// them physical); while the fleet is parked, EV levels that would leave
    /// too little time to restore the arrival SoC are masked out.
    [[nodiscard]] ActionMask action_mask() const {
        if (!cfg_.departure_guard || !sc_->ev_window.online(hour_)) return full_mask();
        return joint_mask(departure_guard(soc_ev_, episode_.ev_arrival_soc, sc_->ev_window.hours_to_departure(hour_),
                                          sc_->ev, actions_, cfg_.dt_h));
    }

    StepResult step(std::size_t action) {
        if (!in_episode_) throw InvalidArgument("step called outside an episode; call reset first");
        if (!action_mask()[action]) throw InvalidArgument("action " + std::to_string(action) + " is masked");
        const std::size_t t = global_hour();
        const bool online = sc_->ev_window.online(hour_);
        const auto req = actions_.decode(action);
        const double ev_req = online ? req.ev_kw : 0.0;

        const auto ess_clip = core::clip_action_to_feasible(soc_ess_, req.ess_kw, sc_->ess, cfg_.dt_h);
        const auto ev_clip = online ? core::clip_action_to_feasible(soc_ev_, ev_req, sc_->ev, cfg_.dt_h) : core::ClippedAction{};
        const double net = sc_->net_load(t);
        const auto flows = core::make_power_flows(net, ess_clip.executed_kw, ev_clip.executed_kw);
        if (!core::check_power_balance(flows)) throw Error("power balance violated at hour " + std::to_string(t));
        const auto cash = core::step_cashflow(flows.alloc, sc_->tariff, hour_, flows.cbs_charge(), cfg_.dt_h);
        const auto cycle = degradation::step_cycle_cost(coeffs_, ess_clip.executed_kw, ev_clip.executed_kw, cfg_.dt_h);
        const auto phi = compute_price_ratios(sc_->tariff.buy(hour_), sc_->tariff.daily_average(), net, rolling_avg_[t]);

        RewardInputs in;
        in.cbs_discharge_kw = flows.cbs_discharge();
        in.cbs_charge_kw = flows.cbs_charge();
        in.ess_cycle_cost = cfg_.degradation_blind ? 0.0 : cycle.ess;
        in.ev_cycle_cost = cfg_.degradation_blind ? 0.0 : cycle.ev;
        in.violation_kw = ess_clip.violation_kw + ev_clip.violation_kw;
        const auto reward = compute_reward(in, phi, cfg_.reward);

        soc_ess_ = core::apply_power(soc_ess_, ess_clip.executed_kw, sc_->ess, cfg_.dt_h);
        if (online) soc_ev_ = core::apply_power(soc_ev_, ev_clip.executed_kw, sc_->ev, cfg_.dt_h);

        TraceRow row;
        row.t = t;
        row.day = day_;
        row.hour = hour_;
        row.buy_price = sc_->tariff.buy(hour_);
        row.sell_price = sc_->tariff.sell(hour_);
        row.net_load = net;
        row.action = action;
        row.ess_requested = req.ess_kw;
        row.ev_requested = ev_req;
        row.ess_executed = ess_clip.executed_kw;
        row.ev_executed = ev_clip.executed_kw;
        row.ess_violation = ess_clip.violation_kw;
        row.ev_violation = ev_clip.violation_kw;
        row.alloc = flows.alloc;
        row.revenue = cash.revenue;
        row.energy_cost = cash.energy_cost;
        row.reward = reward;
        row.soc_ess = soc_ess_;
        row.soc_ev = online ? soc_ev_ : 0.0;
        row.ev_online = online;
        row.ess_cycle_cost = cycle.ess;
        row.ev_cycle_cost = cycle.ev;

        episode_.revenue += cash.revenue;
        episode_.energy_cost += cash.energy_cost;
        episode_.ess_cycle_cost += cycle.ess;
        episode_.ev_cycle_cost += cycle.ev;
        episode_.ess_throughput_kwh += std::abs(ess_clip.executed_kw) * cfg_.dt_h;
        episode_.ev_throughput_kwh += std::abs(ev_clip.executed_kw) * cfg_.dt_h;
        episode_.reward += reward.total;
        ess_profile_.push_back(soc_ess_);
        if (online) ev_profile_.push_back(soc_ev_);

        if (online && static_cast<int>(hour_) == sc_->ev_window.departure_hour - 1) {
            episode_.ev_departure_soc = soc_ev_;
            episode_.departure_violation = soc_ev_ < episode_.ev_arrival_soc - kGuardTolerance;
            row.departure_violation = episode_.departure_violation;
        }

        ++hour_;
        bool done = false;
        if (hour_ == core::kHoursPerDay) {
            done = true;
            in_episode_ = false;
            finish_episode();
            row.ess_calendar_cost = episode_.ess_calendar_cost;
            row.ev_calendar_cost = episode_.ev_calendar_cost;
        } else {
            if (static_cast<int>(hour_) == sc_->ev_window.departure_hour) soc_ev_ = 0.0;
            maybe_arrive();
        }
        rebuild_state();
        return {&state_, reward, row, done};
    }

    [[nodiscard]] const EpisodeOutcome& last_episode() const { return episode_; }

    [[nodiscard]] double soc_ess() const { return soc_ess_; }
    [[nodiscard]] double soc_ev() const { return soc_ev_; }
    void set_soc_ess(double soc) {
        if (!sc_->ess.soc.contains(soc)) throw InvalidArgument("ESS SoC outside bounds");
        soc_ess_ = soc;
    }

    [[nodiscard]] const degradation::AgingLedger& ess_ledger() const { return ess_ledger_; }
    [[nodiscard]] const degradation::AgingLedger& ev_ledger() const { return ev_ledger_; }
    [[nodiscard]] const degradation::DegradationCoefficients& coefficients() const { return coeffs_; }
    void set_coefficients(const degradation::DegradationCoefficients& c) { coeffs_ = c; }

    /// Fresh batteries and initial aging prices.
    void reset_aging() {
        ess_ledger_ = {};
        ev_ledger_ = {};
        coeffs_ = {};
    }

private:
    void maybe_arrive() {
        if (static_cast<int>(hour_) == sc_->ev_window.arrival_hour) {
            soc_ev_ = sc_->arrival_soc[day_];
            ev_profile_.assign(1, soc_ev_);
        }
    }

    void rebuild_state() {
        const std::size_t n = sc_->profile.horizon();
        const std::size_t t = std::min(global_hour(), n - 1);
        const std::size_t h = hour_ % core::kHoursPerDay;
        state_ = build_state(h, sc_->tariff, sc_->net_load(t), (*fc_)[t], sc_->ev_window, soc_ess_, soc_ev_);
    }

    void finish_episode() {
        const double ev_days = static_cast<double>(sc_->ev_window.online_hours()) * cfg_.dt_h / core::kHoursPerDay;
        episode_.ess_aging = degradation::apply_episode_aging(ess_ledger_, sc_->ess_chemistry, ess_profile_,
                                                              sc_->temperature_k, cfg_.dt_h * core::kHoursPerDay / 24.0,
                                                              cfg_.dt_h * 3600.0);
        episode_.ev_aging = degradation::apply_episode_aging(ev_ledger_, sc_->ev_chemistry, ev_profile_,
                                                             sc_->temperature_k, ev_days, cfg_.dt_h * 3600.0);
        episode_.ess_calendar_cost = degradation::calendar_cost(episode_.ess_aging.delta_q_cal, sc_->ess);
        episode_.ev_calendar_cost = degradation::calendar_cost(episode_.ev_aging.delta_q_cal, sc_->ev);
        if (!cfg_.freeze_coefficients) {
            coeffs_ = degradation::update_degradation_coefficients(
                coeffs_, episode_.ess_aging.delta_q_cycle, episode_.ess_throughput_kwh, sc_->ess,
                episode_.ev_aging.delta_q_cycle, episode_.ev_throughput_kwh, sc_->ev);
        }
        episode_.coefficients_after = coeffs_;
        soc_ev_ = 0.0;
    }

    void precompute_net_statistics() {
        const std::size_t n = sc_->profile.horizon();
        std::vector<double> net(n);
        for (std::size_t t = 0; t < n; ++t) net[t] = sc_->net_load(t);
        double first_day_mean = 0.0;
        for (std::size_t t = 0; t < core::kHoursPerDay; ++t) first_day_mean += net[t];
        first_day_mean /= core::kHoursPerDay;

        constexpr std::ptrdiff_t kWindow = 48;
        rolling_avg_.assign(n, 0.0);
        net_scale_.assign(n, 1.0);
        for (std::size_t t = 0; t < n; ++t) {
            double sum = 0.0;
            double scale = std::abs(net[t]);
            for (std::ptrdiff_t k = 1; k <= kWindow; ++k) {
                const auto i = static_cast<std::ptrdiff_t>(t) - k;
                sum += i >= 0 ? net[static_cast<std::size_t>(i)] : first_day_mean;
                if (k < kWindow) scale = std::max(scale, std::abs(forecast::padded_value(net, i)));
            }
            rolling_avg_[t] = std::max(sum / kWindow, kMinRollingNetKw);
            net_scale_[t] = std::max(scale, kMinRollingNetKw);
        }
    }

    static constexpr double kMinRollingNetKw = 1.0;

    const Scenario* sc_;
    const forecast::HorizonTable* fc_;
    EnvConfig cfg_;
    ActionTable actions_{};
    EnvState state_{};
    std::size_t day_ = 0;
    std::size_t hour_ = 0;
    bool in_episode_ = false;
    double soc_ess_;
    double soc_ev_ = 0.0;
    std::vector<double> ess_profile_;
    std::vector<double> ev_profile_;
    std::vector<double> rolling_avg_;
    std::vector<double> net_scale_;
    degradation::AgingLedger ess_ledger_{};
    degradation::AgingLedger ev_ledger_{};
    degradation::DegradationCoefficients coeffs_{};
    EpisodeOutcome episode_{};
};

} // namespace gridsched::env
