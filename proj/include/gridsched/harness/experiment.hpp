#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridsched/agent/dqn.hpp"
#include "gridsched/env/environment.hpp"
#include "gridsched/error.hpp"
#include "gridsched/forecast/forecaster.hpp"
#include "gridsched/harness/dp_oracle.hpp"
#include "gridsched/harness/rollout.hpp"
#include "gridsched/harness/scenario_gen.hpp"

namespace gridsched::harness {

enum class ForecastMode { Deployment, Oracle };

inline std::string_view to_string(ForecastMode m) { return m == ForecastMode::Oracle ? "oracle" : "deployment"; }
inline ForecastMode forecast_mode_from_string(std::string_view s) {
    if (s == "deployment") return ForecastMode::Deployment;
    if (s == "oracle") return ForecastMode::Oracle;
    throw InvalidArgument("unknown forecast mode '" + std::string(s) + "' (expected deployment or oracle)");
}

struct ExperimentConfig {
    ScenarioConfig scenario{};
    std::uint64_t scenario_seed = 2024;
    agent::AgentConfig agent{};
    forecast::ForecasterConfig forecast{};
    ForecastMode forecast_mode = ForecastMode::Deployment;
    env::EnvConfig env{};
};

/// A generated scenario with its net-load forecast table.
struct PreparedScenario {
    env::Scenario scenario;
    forecast::HorizonTable forecasts;
    std::size_t train_days = 0;
    std::size_t eval_days = 0;

    [[nodiscard]] std::size_t eval_first_day() const { return train_days; }
};

/// Generates the scenario and forecasts its net load. The forecaster only
/// ever sees the training days; forecasts at evaluation hours use observed
/// history, never the future.
inline PreparedScenario prepare_scenario(const ExperimentConfig& cfg) {
    PreparedScenario p;
    p.scenario = generate_scenario(cfg.scenario, cfg.scenario_seed);
    p.train_days = static_cast<std::size_t>(cfg.scenario.train_days());
    p.eval_days = static_cast<std::size_t>(cfg.scenario.eval_days);
    if (cfg.forecast_mode == ForecastMode::Oracle) {
        p.forecasts = forecast::oracle_net_load_table(p.scenario.profile);
    } else {
        const auto f = forecast::train_net_load_forecaster(p.scenario.profile, p.train_days * core::kHoursPerDay,
                                                           cfg.forecast, cfg.scenario_seed + 7);
        p.forecasts = forecast::net_load_table(f, p.scenario.profile);
    }
    return p;
}

struct EpisodeLog {
    int episode = 0; ///< 1-based
    std::size_t day = 0;
    double reward = 0.0;
    double operating_cost = 0.0;
    double epsilon = 0.0;
    double mean_loss = 0.0;
    double ess_throughput_kwh = 0.0;
    double ev_throughput_kwh = 0.0;
    env::EpisodeOutcome outcome{};
    double ess_soh = 1.0;
    double ev_soh = 1.0;
    int ess_replacements = 0;
    int ev_replacements = 0;
    bool target_synced = false;
};

struct TrainingResult {
    agent::DqnAgent agent;
    std::vector<EpisodeLog> curve;
};

using ProgressCallback = std::function<void(const EpisodeLog&)>;

/// Episode loop: one day per episode, cycling through the training days.
/// The aging ledgers and ESS SoC carry across episodes; aging prices refresh
/// at each episode end.
inline TrainingResult run_training(const PreparedScenario& prepared, const ExperimentConfig& cfg,
                                   const ProgressCallback& progress = {}) {
    if (prepared.train_days < 1) throw InvalidArgument("need at least one training day");
    env::MicrogridEnv e(prepared.scenario, prepared.forecasts, cfg.env);
    TrainingResult out{agent::DqnAgent(cfg.agent), {}};
    auto& learner = out.agent;
    out.curve.reserve(static_cast<std::size_t>(cfg.agent.episodes));
    for (int ep = 0; ep < cfg.agent.episodes; ++ep) {
        const std::size_t day = static_cast<std::size_t>(ep) % prepared.train_days;
        const double eps = learner.epsilon();
        e.reset(day);
        auto features = e.features();
        double loss_sum = 0.0;
        int loss_count = 0;
        bool done = false;
        while (!done) {
            const auto mask = e.action_mask();
            const std::size_t a = learner.act(features, mask);
            const auto res = e.step(a);
            done = res.done;
            const auto next = e.features();
            const auto next_mask = done ? env::full_mask() : e.action_mask();
            learner.remember(features, a, res.reward.total, next, next_mask, done);
            if (const auto st = learner.learn()) {
                loss_sum += st->loss;
                ++loss_count;
            }
            features = next;
        }
        EpisodeLog log;
        log.episode = ep + 1;
        log.day = day;
        log.outcome = e.last_episode();
        log.reward = log.outcome.reward;
        log.operating_cost = log.outcome.energy_cost - log.outcome.revenue + log.outcome.ess_cycle_cost +
                             log.outcome.ev_cycle_cost + log.outcome.ess_calendar_cost + log.outcome.ev_calendar_cost;
        log.epsilon = eps;
        log.mean_loss = loss_count > 0 ? loss_sum / loss_count : 0.0;
        log.ess_throughput_kwh = log.outcome.ess_throughput_kwh;
        log.ev_throughput_kwh = log.outcome.ev_throughput_kwh;
        log.ess_soh = e.ess_ledger().soh;
        log.ev_soh = e.ev_ledger().soh;
        log.ess_replacements = e.ess_ledger().replacements;
        log.ev_replacements = e.ev_ledger().replacements;
        log.target_synced = learner.end_episode();
        out.curve.push_back(log);
        if (progress) progress(log);
    }
    return out;
}

/// Greedy policy of a trained agent.
inline Policy greedy_policy(const agent::DqnAgent& learner) {
    return [&learner](const env::MicrogridEnv& e) { return learner.greedy(e.features(), e.action_mask()); };
}

inline RunResult evaluate_agent(const PreparedScenario& prepared, const ExperimentConfig& cfg,
                                const agent::DqnAgent& learner) {
    return evaluate(prepared.scenario, prepared.forecasts, cfg.env, prepared.eval_first_day(), prepared.eval_days,
                    greedy_policy(learner), std::string(agent::to_string(learner.config().variant)));
}

inline RunResult evaluate_uncontrolled(const PreparedScenario& prepared, const ExperimentConfig& cfg) {
    return evaluate(prepared.scenario, prepared.forecasts, cfg.env, prepared.eval_first_day(), prepared.eval_days,
                    uncontrolled_policy(), "uncontrolled");
}

/// Perfect-foresight optimum over the evaluation window at frozen initial
/// aging prices.
inline RunResult evaluate_oracle(const PreparedScenario& prepared, double grid_step = 0.05) {
    DpOptions opt;
    opt.grid_step = grid_step;
    opt.first_day = prepared.eval_first_day();
    opt.days = prepared.eval_days;
    DpOracle dp(prepared.scenario, opt);
    dp.solve();
    return dp.run(prepared.forecasts);
}

} // namespace gridsched::harness
