#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

#include "gridsched/harness/config.hpp"
#include "gridsched/harness/dp_oracle.hpp"
#include "gridsched/harness/export.hpp"
#include "gridsched/harness/parallel.hpp"

using namespace gridsched;
using namespace gridsched::harness;

namespace {
env::Scenario lossless_scenario() {
    auto cfg = default_scenario(Season::Summer);
    cfg.days = 2;
    cfg.eval_days = 1;
    auto sc = generate_scenario(cfg, 21);
    for (auto* b : {&sc.ess, &sc.ev}) {
        b->charge_eff = 1.0;
        b->discharge_eff = 1.0;
    }
    sc.ev_window.arrival_hour = 0;
    sc.ev_window.departure_hour = 24;
    sc.arrival_soc = {0.5, 0.5};
    sc.initial_ess_soc = 0.5;
    return sc;
}

ExperimentConfig quick_config() {
    ExperimentConfig c;
    c.scenario.days = 6;
    c.scenario.eval_days = 2;
    c.forecast_mode = ForecastMode::Oracle;
    c.agent.episodes = 8;
    c.agent.hidden = {16};
    return c;
}
} // namespace

TEST(ScenarioGen, SeedDeterminesEverything) {
    const auto cfg = default_scenario(Season::Winter);
    const auto a = generate_scenario(cfg, 5), b = generate_scenario(cfg, 5), c = generate_scenario(cfg, 6);
    EXPECT_EQ(a.profile.load, b.profile.load);
    EXPECT_EQ(a.profile.pv, b.profile.pv);
    EXPECT_EQ(a.arrival_soc, b.arrival_soc);
    EXPECT_NE(a.profile.load, c.profile.load);
    EXPECT_EQ(a.days(), static_cast<std::size_t>(cfg.days));
    for (double v : a.profile.pv) EXPECT_GE(v, 0.0);
    for (double v : a.profile.load) EXPECT_GE(v, 0.0);
    for (std::size_t t = 0; t < a.profile.horizon(); ++t) {
        const auto h = static_cast<int>(t % 24);
        if (h < cfg.pv.sunrise_hour || h >= cfg.pv.sunset_hour) {
            EXPECT_EQ(a.profile.pv[t], 0.0);
        }
    }
}

TEST(ScenarioGen, SeasonsDiffer) {
    const auto s = generate_scenario(default_scenario(Season::Summer), 1);
    const auto w = generate_scenario(default_scenario(Season::Winter), 1);
    const double pv_s = std::accumulate(s.profile.pv.begin(), s.profile.pv.end(), 0.0);
    const double pv_w = std::accumulate(w.profile.pv.begin(), w.profile.pv.end(), 0.0);
    EXPECT_GT(pv_s, pv_w);
}

TEST(DpOracle, MatchesExhaustiveSearchOnShortHorizon) {
    const auto sc = lossless_scenario();
    const auto fc = forecast::oracle_net_load_table(sc.profile);
    DpOptions opt;
    opt.hours = 3;
    DpOracle dp(sc, opt);
    dp.solve();

    double best = std::numeric_limits<double>::infinity();
    env::EnvConfig cfg;
    cfg.freeze_coefficients = true;
    env::MicrogridEnv e(sc, fc, cfg);
    for (std::size_t a0 = 0; a0 < env::kActionCount; ++a0)
        for (std::size_t a1 = 0; a1 < env::kActionCount; ++a1)
            for (std::size_t a2 = 0; a2 < env::kActionCount; ++a2) {
                e.set_soc_ess(0.5);
                e.reset(0);
                double cost = 0.0;
                bool feasible = true;
                for (std::size_t a : {a0, a1, a2}) {
                    if (!e.action_mask()[a]) {
                        feasible = false;
                        break;
                    }
                    const auto r = e.step(a);
                    cost += r.row.energy_cost - r.row.revenue + r.row.ess_cycle_cost + r.row.ev_cycle_cost;
                }
                if (feasible) best = std::min(best, cost);
            }
    EXPECT_NEAR(dp.optimal_cost(0.5), best, 1e-6);
}

TEST(DpOracle, NeverWorseThanIdleOverADay) {
    const auto sc = lossless_scenario();
    const auto fc = forecast::oracle_net_load_table(sc.profile);
    DpOracle dp(sc, {});
    dp.solve();
    const auto run = dp.run(fc);
    const auto idle = evaluate(sc, fc, {}, 0, 1, idle_policy(), "idle");
    EXPECT_LE(run.summary.frozen_objective, summarize_trace(idle.trace).frozen_objective + 1e-6);
    EXPECT_EQ(run.summary.departure_violations, 0);
    EXPECT_THROW(DpOracle(sc, DpOptions{0.03}), InvalidArgument);
}

TEST(Rollout, SummaryRecomputedFromTrace) {
    const auto cfg = quick_config();
    const auto prep = prepare_scenario(cfg);
    const auto r = evaluate_uncontrolled(prep, cfg);
    ASSERT_EQ(r.trace.size(), 2u * 24u);
    double energy = 0.0, revenue = 0.0, deg = 0.0;
    for (const auto& row : r.trace) {
        energy += row.energy_cost;
        revenue += row.revenue;
        deg += row.ess_cycle_cost + row.ev_cycle_cost + row.ess_calendar_cost + row.ev_calendar_cost;
    }
    EXPECT_NEAR(r.summary.operating_cost, energy - revenue + deg, 1e-9);
    EXPECT_NEAR(r.summary.building_cost + r.summary.ev_user_cost,
                r.summary.ess_cycle_cost + r.summary.ev_cycle_cost + r.summary.ess_calendar_cost + r.summary.ev_calendar_cost,
                1e-9);
    EXPECT_EQ(r.summary.first_day, prep.eval_first_day());
    EXPECT_EQ(r.summary.days, 2u);
    EXPECT_EQ(r.episodes.size(), 2u);
}

TEST(Experiment, TrainingIsDeterministicPerSeed) {
    const auto cfg = quick_config();
    const auto prep = prepare_scenario(cfg);
    const auto a = run_training(prep, cfg), b = run_training(prep, cfg);
    ASSERT_EQ(a.curve.size(), 8u);
    for (std::size_t k = 0; k < a.curve.size(); ++k) {
        EXPECT_EQ(a.curve[k].reward, b.curve[k].reward);
        EXPECT_EQ(a.curve[k].day, k % prep.train_days);
    }
    EXPECT_TRUE(a.curve[0].target_synced);
    EXPECT_EQ(evaluate_agent(prep, cfg, a.agent).summary.operating_cost,
              evaluate_agent(prep, cfg, b.agent).summary.operating_cost);
}

TEST(Export, SummaryJsonRoundTrip) {
    RunSummary s;
    s.policy = "D3QNPER";
    s.first_day = 48;
    s.days = 12;
    s.operating_cost = 1234.5;
    s.frozen_objective = -7.25;
    s.ev_soh = 0.97;
    s.departure_violations = 2;
    s.max_latency_ms = 0.3;
    const auto path = std::filesystem::temp_directory_path() / "gridsched_summary_test" / "summary.json";
    write_summary_json(path, s);
    const auto t = read_summary_json(path);
    EXPECT_EQ(to_json(t), to_json(s));
    EXPECT_TRUE(read_json(path).contains("timing"));
    std::filesystem::remove_all(path.parent_path());
    EXPECT_THROW(summary_from_json(nlohmann::json{{"policy", "x"}}), SchemaViolation);
    EXPECT_THROW(read_json("/nonexistent/summary.json"), ConfigUnreadable);
    EXPECT_THROW(write_json("/proc/gridsched/x.json", nlohmann::json{}), IoError);
}

TEST(Export, PercentDifference) {
    EXPECT_DOUBLE_EQ(percent_difference(150.0, 100.0), 50.0);
    EXPECT_DOUBLE_EQ(percent_difference(80.0, -100.0), -180.0);
    EXPECT_THROW(percent_difference(1.0, 0.0), InvalidArgument);
}

TEST(Config, RoundTripIsStable) {
    auto c = quick_config();
    c.agent.variant = agent::Variant::D2QN;
    c.scenario.temperature_k = 300.0;
    c.scenario.ess.capacity_kwh = 800.0;
    c.forecast.hyper.layers = 3;
    const auto text = config_to_string(c);
    const auto back = parse_config(text);
    EXPECT_EQ(config_to_string(back), text);
    EXPECT_EQ(back.agent.variant, agent::Variant::D2QN);
    EXPECT_EQ(back.scenario.ess.capacity_kwh, 800.0);
    EXPECT_EQ(back.forecast.hyper.layers, 3);
}

TEST(Config, PartialDocumentKeepsDefaults) {
    const auto c = parse_config("[agent]\nepisodes = 5\n");
    EXPECT_EQ(c.agent.episodes, 5);
    EXPECT_EQ(c.agent.gamma, agent::AgentConfig{}.gamma);
    EXPECT_EQ(c.scenario.days, ScenarioConfig{}.days);
    const auto w = parse_config("[scenario]\nseason = \"winter\"\n");
    EXPECT_EQ(w.scenario.pv.peak_kw, default_scenario(Season::Winter).pv.peak_kw);
}

TEST(Config, RejectsMalformedDocuments) {
    for (const char* bad : {"[agent]\nepisods = 5\n", "[agent]\nepisodes = \"five\"\n", "[bogus]\nx = 1\n",
                            "[agent\n", "[agent]\ngamma = 2.0\n", "[tariff]\nbuy_price = [1.0, 2.0]\n",
                            "[ev]\nvehicle_kwh = 50.0\ncapacity_kwh = 1000.0\n"}) {
        EXPECT_THROW(parse_config(bad), SchemaViolation) << bad;
    }
    try {
        parse_config("[agent]\nepisods = 5\n");
    } catch (const SchemaViolation& e) {
        EXPECT_NE(std::string(e.what()).find("episods"), std::string::npos);
    }
    EXPECT_THROW(load_config("/nonexistent/run.toml"), ConfigUnreadable);
}

TEST(Parallel, ResultsInIndexOrderAndErrorsPropagate) {
    const auto v = parallel_map(100, [](std::size_t i) { return i * i; });
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], i * i);
    EXPECT_THROW(parallel_map(10,
                              [](std::size_t i) -> int {
                                  if (i == 7) throw InvalidArgument("seven");
                                  return 0;
                              }),
                 InvalidArgument);
}
