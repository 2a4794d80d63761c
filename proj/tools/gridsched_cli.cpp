#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gridsched.hpp"

namespace fs = std::filesystem;
using namespace gridsched;
using namespace gridsched::harness;

namespace {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kConfigUnreadable = 3,
    kSchema = 4,
    kRuntime = 5,
    kIo = 6,
};

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string variant;
    std::optional<int> episodes;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& o, const std::string& default_out) {
    o.out = default_out;
    cmd->add_option("--config", o.config, "TOML configuration file");
    cmd->add_option("--seed", o.seed, "seed override");
    cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    cmd->add_option("--variant", o.variant, "DQN, D3QN or D3QNPER");
    cmd->add_option("--episodes", o.episodes, "training episode budget")->check(CLI::PositiveNumber);
    cmd->add_flag("--quiet", o.quiet, "suppress progress output");
}

/// Loads the configuration and applies command-line overrides. --seed
/// replaces the scenario seed when `seed_is_scenario`, else the agent seed.
ExperimentConfig resolve(const CommonOptions& o, bool seed_is_scenario = false) {
    ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
    if (o.seed) {
        if (seed_is_scenario)
            c.scenario_seed = *o.seed;
        else
            c.agent.seed = *o.seed;
    }
    if (!o.variant.empty()) {
        try {
            c.agent.variant = agent::variant_from_string(o.variant);
        } catch (const InvalidArgument& e) {
            throw CLI::ValidationError("--variant", e.what());
        }
    }
    if (o.episodes) c.agent.episodes = *o.episodes;
    return c;
}

void say(const CommonOptions& o, const std::string& msg) {
    if (!o.quiet) std::cerr << msg << '\n';
}

ProgressCallback progress_printer(const CommonOptions& o, int total) {
    if (o.quiet) return {};
    return [total](const EpisodeLog& l) {
        if (l.episode % 100 == 0 || l.episode == total) {
            std::fprintf(stderr, "episode %d/%d  reward %.2f  cost %.1f  eps %.3f  loss %.4g\n", l.episode, total,
                         l.reward, l.operating_cost, l.epsilon, l.mean_loss);
        }
    };
}

void write_run(const fs::path& dir, const RunResult& r) {
    write_trace_csv(dir / "trace.csv", r.trace);
    write_summary_json(dir / "summary.json", r.summary);
    write_degradation_csv(dir / "degradation.csv", r.episodes);
}

void print_summary(const CommonOptions& o, const RunSummary& s) {
    if (o.quiet) return;
    std::printf("%-14s cost %.2f  energy %.2f  revenue %.2f  ESS %.1f kWh  EV %.1f kWh  SoH %.4f/%.4f\n",
                s.policy.c_str(), s.operating_cost, s.energy_cost, s.revenue, s.ess_throughput_kwh, s.ev_throughput_kwh,
                s.ess_soh, s.ev_soh);
}

nlohmann::json metrics_json(const forecast::ForecastMetrics& m) {
    return {{"rmse", m.rmse}, {"mae", m.mae}, {"mase", m.mase}, {"r_squared", m.r_squared}};
}

nlohmann::json forecaster_json(const forecast::NetLoadForecaster& f) {
    return {{"format", "gridsched-forecaster"},
            {"alpha_trade", f.alpha_trade},
            {"load", forecast::to_json(f.load_model)},
            {"pv", forecast::to_json(f.pv_model)}};
}

forecast::NetLoadForecaster forecaster_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format") != "gridsched-forecaster") throw SchemaViolation("not a forecaster document");
        forecast::NetLoadForecaster f;
        f.alpha_trade = j.at("alpha_trade").get<double>();
        f.load_model = forecast::edrvfl_from_json(j.at("load"));
        f.pv_model = forecast::edrvfl_from_json(j.at("pv"));
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("malformed forecaster document: ") + e.what());
    }
}

/// One-step and per-horizon accuracy of a forecaster over the evaluation days.
nlohmann::json forecast_report(const forecast::NetLoadForecaster& f, const env::Scenario& sc, std::size_t first_hour) {
    const auto& prof = sc.profile;
    const std::size_t n = prof.horizon();
    nlohmann::json out;
    auto one_step = [&](const forecast::EdRvflModel& m, const std::vector<double>& series) {
        const auto r = forecast::one_step_forecast(m, series, f.alpha_trade);
        const std::span<const double> actual(series.data() + first_hour, n - first_hour);
        const std::span<const double> pred(r.fused.data() + first_hour, n - first_hour);
        return forecast::compute_metrics(actual, pred, series[first_hour - 1]);
    };
    out["load_one_step"] = metrics_json(one_step(f.load_model, prof.load));
    out["pv_one_step"] = metrics_json(one_step(f.pv_model, prof.pv));

    const auto table = forecast::net_load_table(f, prof);
    nlohmann::json horizons = nlohmann::json::array();
    for (std::size_t k = 0; k < forecast::kForecastSteps; ++k) {
        std::vector<double> actual, pred;
        for (std::size_t t = first_hour; t + k + 1 < n; ++t) {
            actual.push_back(sc.net_load(t + k + 1));
            pred.push_back(table[t][k]);
        }
        auto m = metrics_json(forecast::compute_metrics(actual, pred));
        m["steps_ahead"] = k + 1;
        horizons.push_back(m);
    }
    out["net_load_by_horizon"] = horizons;
    return out;
}

int cmd_generate_data(const CommonOptions& o) {
    const auto cfg = resolve(o, true);
    const fs::path dir(o.out);
    write_config_snapshot(dir / "config.toml", cfg);
    const auto sc = generate_scenario(cfg.scenario, cfg.scenario_seed);
    core::write_profile_csv(dir / "load.csv", sc.profile.load);
    core::write_profile_csv(dir / "pv.csv", sc.profile.pv);
    {
        auto out = detail::open_for_write(dir / "tariff.csv");
        out << "hour,buy_price,sell_price\n";
        for (std::size_t h = 0; h < core::kHoursPerDay; ++h)
            out << h << ',' << sc.tariff.buy(h) << ',' << sc.tariff.sell(h) << '\n';
        detail::finish(out, dir / "tariff.csv");
    }
    {
        auto out = detail::open_for_write(dir / "arrival_soc.csv");
        out << "day,arrival_soc\n";
        for (std::size_t d = 0; d < sc.arrival_soc.size(); ++d) out << d << ',' << sc.arrival_soc[d] << '\n';
        detail::finish(out, dir / "arrival_soc.csv");
    }
    say(o, "wrote " + std::to_string(sc.days()) + " days to " + dir.string());
    return kOk;
}

int cmd_forecast_train(const CommonOptions& o) {
    const auto cfg = resolve(o, true);
    const fs::path dir(o.out);
    write_config_snapshot(dir / "config.toml", cfg);
    const auto sc = generate_scenario(cfg.scenario, cfg.scenario_seed);
    const auto train_hours = static_cast<std::size_t>(cfg.scenario.train_days()) * core::kHoursPerDay;
    const auto f = forecast::train_net_load_forecaster(sc.profile, train_hours, cfg.forecast, cfg.scenario_seed + 7);
    write_json(dir / "forecaster.json", forecaster_json(f));
    const auto report = forecast_report(f, sc, train_hours);
    write_json(dir / "forecast_metrics.json", report);
    if (!o.quiet)
        std::printf("load RMSE %.3f kW  PV RMSE %.3f kW (one step, evaluation days)\n",
                    report["load_one_step"]["rmse"].get<double>(), report["pv_one_step"]["rmse"].get<double>());
    return kOk;
}

int cmd_forecast_eval(const CommonOptions& o, const std::string& model_path) {
    const auto cfg = resolve(o, true);
    const fs::path dir(o.out);
    write_config_snapshot(dir / "config.toml", cfg);
    const auto sc = generate_scenario(cfg.scenario, cfg.scenario_seed);
    const auto train_hours = static_cast<std::size_t>(cfg.scenario.train_days()) * core::kHoursPerDay;
    const auto f = model_path.empty()
                       ? forecast::train_net_load_forecaster(sc.profile, train_hours, cfg.forecast, cfg.scenario_seed + 7)
                       : forecaster_from_json(read_json(model_path));
    const auto report = forecast_report(f, sc, train_hours);
    write_json(dir / "forecast_metrics.json", report);

    const auto table = forecast::net_load_table(f, sc.profile);
    auto out = detail::open_for_write(dir / "forecasts.csv");
    out << "t,actual_net_load";
    for (std::size_t k = 1; k <= forecast::kForecastSteps; ++k) out << ",h" << k;
    out << '\n';
    for (std::size_t t = train_hours; t < table.size(); ++t) {
        out << t << ',' << sc.net_load(t);
        for (double v : table[t]) out << ',' << v;
        out << '\n';
    }
    detail::finish(out, dir / "forecasts.csv");
    if (!o.quiet) std::cout << report.dump(2) << '\n';
    return kOk;
}

int cmd_train(const CommonOptions& o) {
    const auto cfg = resolve(o);
    const fs::path dir(o.out);
    write_config_snapshot(dir / "config.toml", cfg);
    say(o, "preparing scenario and forecasts");
    const auto prepared = prepare_scenario(cfg);
    auto result = run_training(prepared, cfg, progress_printer(o, cfg.agent.episodes));
    agent::save_checkpoint(result.agent, dir / "checkpoint.json");
    write_learning_curve_csv(dir / "learning_curve.csv", result.curve);
    std::vector<env::EpisodeOutcome> training_aging;
    for (const auto& l : result.curve) training_aging.push_back(l.outcome);
    write_degradation_csv(dir / "training_degradation.csv", training_aging);
    const auto eval = evaluate_agent(prepared, cfg, result.agent);
    write_run(dir, eval);
    print_summary(o, eval.summary);
    return kOk;
}

int cmd_evaluate(const CommonOptions& o, const std::string& checkpoint) {
    const auto cfg = resolve(o);
    const fs::path dir(o.out);
    write_config_snapshot(dir / "config.toml", cfg);
    const auto learner = agent::load_checkpoint(checkpoint);
    const auto prepared = prepare_scenario(cfg);
    const auto eval = evaluate_agent(prepared, cfg, learner);
    write_run(dir, eval);
    print_summary(o, eval.summary);
    return kOk;
}

int cmd_baseline(const CommonOptions& o) {
    const auto cfg = resolve(o);
    const fs::path dir(o.out);
    write_config_snapshot(dir / "config.toml", cfg);
    const auto prepared = prepare_scenario(cfg);
    const auto eval = evaluate_uncontrolled(prepared, cfg);
    write_run(dir, eval);
    print_summary(o, eval.summary);
    return kOk;
}

int cmd_oracle(const CommonOptions& o) {
    const auto cfg = resolve(o);
    const fs::path dir(o.out);
    write_config_snapshot(dir / "config.toml", cfg);
    const auto prepared = prepare_scenario(cfg);
    const auto eval = evaluate_oracle(prepared);
    write_run(dir, eval);
    print_summary(o, eval.summary);
    say(o, "note: the oracle plans at frozen initial aging prices; compare on frozen_objective");
    return kOk;
}

RunSummary mean_summary(const std::vector<RunSummary>& runs, const std::string& name) {
    RunSummary m;
    m.policy = name;
    const double n = static_cast<double>(runs.size());
    for (const auto& r : runs) {
        m.first_day = r.first_day;
        m.days = r.days;
        m.operating_cost += r.operating_cost / n;
        m.energy_cost += r.energy_cost / n;
        m.revenue += r.revenue / n;
        m.building_cost += r.building_cost / n;
        m.ev_user_cost += r.ev_user_cost / n;
        m.ess_throughput_kwh += r.ess_throughput_kwh / n;
        m.ev_throughput_kwh += r.ev_throughput_kwh / n;
        m.frozen_objective += r.frozen_objective / n;
        m.ess_soh += (r.ess_soh - 1.0) / n;
        m.ev_soh += (r.ev_soh - 1.0) / n;
    }
    return m;
}

int cmd_compare(const CommonOptions& o, int seeds) {
    const auto cfg = resolve(o);
    const fs::path dir(o.out);
    write_config_snapshot(dir / "config.toml", cfg);
    const auto prepared = prepare_scenario(cfg);

    std::vector<agent::Variant> variants{agent::Variant::D3QNPER, agent::Variant::D3QN, agent::Variant::DQN};
    if (!o.variant.empty()) variants = {cfg.agent.variant};
    const std::size_t runs = variants.size() * static_cast<std::size_t>(seeds);
    say(o, "training " + std::to_string(runs) + " agents on up to " + std::to_string(thread_cap()) + " threads");
    const auto summaries = parallel_map(runs, [&](std::size_t i) {
        auto c = cfg;
        c.agent.variant = variants[i / static_cast<std::size_t>(seeds)];
        c.agent.seed = cfg.agent.seed + i % static_cast<std::size_t>(seeds);
        const auto trained = run_training(prepared, c);
        auto eval = evaluate_agent(prepared, c, trained.agent);
        const auto run_dir = dir / (std::string(agent::to_string(c.agent.variant)) + "_seed" + std::to_string(c.agent.seed));
        write_run(run_dir, eval);
        return eval.summary;
    });

    std::vector<RunSummary> rows;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const std::vector<RunSummary> group(summaries.begin() + static_cast<std::ptrdiff_t>(v * seeds),
                                            summaries.begin() + static_cast<std::ptrdiff_t>((v + 1) * seeds));
        rows.push_back(mean_summary(group, std::string(agent::to_string(variants[v]))));
    }
    const auto unc = evaluate_uncontrolled(prepared, cfg);
    write_run(dir / "uncontrolled", unc);
    rows.push_back(unc.summary);
    const auto dp = evaluate_oracle(prepared);
    write_run(dir / "dp_oracle", dp);
    rows.push_back(dp.summary);

    write_comparison_csv(dir / "comparison.csv", rows.front(), rows);
    for (const auto& r : rows) print_summary(o, r);
    return kOk;
}

int cmd_degradation_report(const CommonOptions& o, const std::string& checkpoint) {
    const auto cfg = resolve(o);
    const fs::path dir(o.out);
    write_config_snapshot(dir / "config.toml", cfg);
    const auto prepared = prepare_scenario(cfg);
    RunResult r;
    if (checkpoint.empty()) {
        r = evaluate_uncontrolled(prepared, cfg);
    } else {
        const auto learner = agent::load_checkpoint(checkpoint);
        r = evaluate_agent(prepared, cfg, learner);
    }
    write_degradation_csv(dir / "degradation.csv", r.episodes);
    write_summary_json(dir / "summary.json", r.summary);

    // Cycle fade of both chemistries over a depth and temperature grid at
    // mid SoC, after 6000 equivalent full cycles.
    auto out = detail::open_for_write(dir / "chemistry_grid.csv");
    out << "chemistry,dod,temperature_k,mean_soc,cycles,capacity_fade\n";
    for (const auto& p : {prepared.scenario.ess_chemistry, prepared.scenario.ev_chemistry}) {
        for (double dod : {0.2, 0.4, 0.6, 0.8}) {
            for (double temp : {298.15, 308.15, 318.15}) {
                const degradation::CycleRecord c{dod, 0.5, 3600.0, 1.0};
                const double stress = 6000.0 * degradation::cycle_stress(p, c, temp);
                out << core::to_string(p.chemistry) << ',' << dod << ',' << temp << ",0.5,6000,"
                    << degradation::capacity_fade_from_stress(p, stress) << '\n';
            }
        }
    }
    detail::finish(out, dir / "chemistry_grid.csv");
    print_summary(o, r.summary);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degradation-aware microgrid scheduling"};
    app.require_subcommand(1);
    app.set_version_flag("--version", PROJECT_VERSION);

    std::map<std::string, CommonOptions> opts;
    auto sub = [&](const std::string& name, const std::string& help) {
        auto* cmd = app.add_subcommand(name, help);
        add_common(cmd, opts[name], "runs/" + name);
        return cmd;
    };
    sub("generate-data", "write the scenario profiles, tariff and arrival SoC");
    sub("forecast-train", "train the net-load forecaster");
    std::string model_path;
    sub("forecast-eval", "score a forecaster on the evaluation days")
        ->add_option("--model", model_path, "forecaster.json from forecast-train");
    sub("train", "train an agent and evaluate it");
    std::string checkpoint;
    sub("evaluate", "evaluate a trained checkpoint")->add_option("--checkpoint", checkpoint, "checkpoint.json")->required();
    sub("baseline", "evaluate the uncontrolled policy");
    sub("oracle", "evaluate the perfect-foresight DP schedule");
    int seeds = 5;
    sub("compare", "train every variant over several seeds against the baselines")
        ->add_option("--seeds", seeds, "seeds per variant")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    std::string report_checkpoint;
    sub("degradation-report", "per-episode aging and the chemistry fade grid")
        ->add_option("--checkpoint", report_checkpoint, "evaluate this checkpoint instead of the uncontrolled policy");

    if (argc > 1 && argv[1][0] != '-') {
        bool known = false;
        for (const auto* cmd : app.get_subcommands({})) known = known || cmd->get_name() == argv[1];
        if (!known) {
            std::cerr << "error: unknown verb '" << argv[1] << "'\n";
            return kUsage;
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    const std::string verb = app.get_subcommands().front()->get_name();
    const auto& o = opts[verb];
    try {
        if (verb == "generate-data") return cmd_generate_data(o);
        if (verb == "forecast-train") return cmd_forecast_train(o);
        if (verb == "forecast-eval") return cmd_forecast_eval(o, model_path);
        if (verb == "train") return cmd_train(o);
        if (verb == "evaluate") return cmd_evaluate(o, checkpoint);
        if (verb == "baseline") return cmd_baseline(o);
        if (verb == "oracle") return cmd_oracle(o);
        if (verb == "compare") return cmd_compare(o, seeds);
        if (verb == "degradation-report") return cmd_degradation_report(o, report_checkpoint);
        std::cerr << "error: unknown verb " << verb << '\n';
        return kUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigUnreadable& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigUnreadable;
    } catch (const SchemaViolation& e) {
        std::cerr << "schema error: " << e.what() << '\n';
        return kSchema;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kRuntime;
    }
}
