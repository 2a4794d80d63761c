#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gridsched/core/types.hpp"
#include "gridsched/error.hpp"
#include "gridsched/forecast/edrvfl.hpp"
#include "gridsched/forecast/fusion.hpp"
#include "gridsched/forecast/metrics.hpp"

namespace gridsched::forecast {

inline constexpr std::size_t kForecastSteps = 23;

struct ForecasterConfig {
    EdRvflHyperparams hyper{};
    double alpha_trade = 0.6;
    bool oracle = false; ///< use true future values instead of the model
};

/// Value of `series` at index i, with indices before the start taken from the
/// same hour of the first day.
inline double padded_value(std::span<const double> series, std::ptrdiff_t i) {
    if (i >= 0) return series[static_cast<std::size_t>(i)];
    const auto day = static_cast<std::ptrdiff_t>(std::min<std::size_t>(core::kHoursPerDay, series.size()));
    return series[static_cast<std::size_t>(((i % day) + day) % day)];
}

/// One-step fused predictions for every index t >= 1, each made from the
/// window ending at t - 1. Also returns the per-layer predictions so callers
/// can seed the fusion state.
struct OneStepResult {
    std::vector<double> fused;          ///< fused[t] predicts series[t]; fused[0] is series[0]
    Eigen::MatrixXd layer_predictions;  ///< row t: layer outputs for series[t], original units
    std::vector<std::vector<double>> weights;
};

inline Eigen::MatrixXd window_matrix(const EdRvflModel& model, std::span<const double> series, std::size_t first_target,
                                     std::size_t count) {
    const int w = model.input_dim;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(count), w);
    for (std::size_t r = 0; r < count; ++r) {
        const auto target = static_cast<std::ptrdiff_t>(first_target + r);
        for (int c = 0; c < w; ++c) x(static_cast<Eigen::Index>(r), c) = model.scaler.normalize(padded_value(series, target - w + c));
    }
    return x;
}

inline OneStepResult one_step_forecast(const EdRvflModel& model, std::span<const double> series, double alpha_trade) {
    if (series.size() < 2) throw InvalidArgument("need at least two observations");
    const std::size_t n = series.size();
    const Eigen::MatrixXd scaled = predict_layers_scaled(model, window_matrix(model, series, 1, n - 1));
    OneStepResult out;
    out.layer_predictions = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), scaled.cols());
    for (Eigen::Index r = 0; r < scaled.rows(); ++r)
        for (Eigen::Index l = 0; l < scaled.cols(); ++l) out.layer_predictions(r + 1, l) = model.scaler.denormalize(scaled(r, l));
    out.fused.assign(n, series[0]);
    out.weights.resize(n);
    FusionState state;
    state.alpha_trade = alpha_trade;
    std::vector<double> preds(static_cast<std::size_t>(scaled.cols()));
    for (std::size_t t = 1; t < n; ++t) {
        for (std::size_t l = 0; l < preds.size(); ++l) preds[l] = out.layer_predictions(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(l));
        const auto res = fuse_predictions(preds, state);
        out.fused[t] = res.combined;
        out.weights[t] = res.weights;
        state.record(preds, series[t]);
    }
    return out;
}

/// Row t holds forecasts of series[t+1 .. t+23] made with data up to t.
using HorizonTable = std::vector<std::array<double, kForecastSteps>>;

/// Recursive multi-step forecasts from every origin. Each step feeds the
/// fused prediction back into the window; the fusion state of an origin is
/// the one known at that origin (latest one-step error).
inline HorizonTable recursive_forecast(const EdRvflModel& model, std::span<const double> series, double alpha_trade,
                                       bool clamp_nonnegative) {
    const std::size_t n = series.size();
    const int w = model.input_dim;
    const auto one_step = one_step_forecast(model, series, alpha_trade);
    const auto layers = static_cast<std::size_t>(model.layers());

    // Scaled rolling windows, one per origin.
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), w);
    for (std::size_t t = 0; t < n; ++t)
        for (int c = 0; c < w; ++c)
            x(static_cast<Eigen::Index>(t), c) =
                model.scaler.normalize(padded_value(series, static_cast<std::ptrdiff_t>(t) + 1 - w + c));

    std::vector<FusionState> states(n);
    for (std::size_t t = 0; t < n; ++t) {
        states[t].alpha_trade = alpha_trade;
        if (t >= 1) {
            std::vector<double> p(layers);
            for (std::size_t l = 0; l < layers; ++l)
                p[l] = one_step.layer_predictions(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(l));
            states[t].record(p, series[t]);
        }
    }

    HorizonTable table(n);
    std::vector<double> preds(layers);
    for (std::size_t k = 0; k < kForecastSteps; ++k) {
        const Eigen::MatrixXd scaled = predict_layers_scaled(model, x);
        Eigen::VectorXd next(static_cast<Eigen::Index>(n));
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t l = 0; l < layers; ++l)
                preds[l] = model.scaler.denormalize(scaled(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(l)));
            double v = fuse_predictions(preds, states[t]).combined;
            if (clamp_nonnegative) v = std::max(v, 0.0);
            table[t][k] = v;
            next(static_cast<Eigen::Index>(t)) = model.scaler.normalize(v);
        }
        if (w > 1) x.leftCols(w - 1) = x.rightCols(w - 1).eval();
        x.col(w - 1) = next;
    }
    return table;
}

/// True future values; indices past the end repeat the last available day.
inline HorizonTable oracle_forecast(std::span<const double> series) {
    const std::size_t n = series.size();
    HorizonTable table(n);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t k = 0; k < kForecastSteps; ++k) {
            std::size_t i = t + k + 1;
            while (i >= n) i -= core::kHoursPerDay;
            table[t][k] = series[i];
        }
    }
    return table;
}

/// Net-load forecaster: separate load and PV models trained on the leading
/// `train_hours` of the profile.
struct NetLoadForecaster {
    EdRvflModel load_model;
    EdRvflModel pv_model;
    double alpha_trade = 0.6;
};

inline NetLoadForecaster train_net_load_forecaster(const core::EnergyProfile& profile, std::size_t train_hours,
                                                   const ForecasterConfig& cfg, std::uint64_t seed) {
    train_hours = std::min(train_hours, profile.horizon());
    const std::span<const double> load(profile.load.data(), train_hours);
    const std::span<const double> pv(profile.pv.data(), train_hours);
    NetLoadForecaster f;
    f.load_model = train_series_model(load, cfg.hyper, seed);
    f.pv_model = train_series_model(pv, cfg.hyper, seed ^ 0x9e3779b97f4a7c15ULL);
    f.alpha_trade = cfg.alpha_trade;
    return f;
}

/// Net-load forecast table for a whole profile.
inline HorizonTable net_load_table(const NetLoadForecaster& f, const core::EnergyProfile& profile) {
    const auto load = recursive_forecast(f.load_model, profile.load, f.alpha_trade, true);
    const auto pv = recursive_forecast(f.pv_model, profile.pv, f.alpha_trade, true);
    HorizonTable net(load.size());
    for (std::size_t t = 0; t < net.size(); ++t)
        for (std::size_t k = 0; k < kForecastSteps; ++k) net[t][k] = load[t][k] - pv[t][k];
    return net;
}

inline HorizonTable oracle_net_load_table(const core::EnergyProfile& profile) {
    std::vector<double> net(profile.horizon());
    for (std::size_t t = 0; t < net.size(); ++t) net[t] = profile.load[t] - profile.pv[t];
    return oracle_forecast(net);
}

struct SweepPoint {
    EdRvflHyperparams hyper{};
    double validation_rmse = std::numeric_limits<double>::infinity();
};

/// Grid search over depth, width and regularization by one-step RMSE on a
/// held-out tail of the series.
inline std::vector<SweepPoint> grid_sweep(std::span<const double> series, std::size_t validation_hours,
                                          const EdRvflHyperparams& base, std::span<const int> layer_grid,
                                          std::span<const int> width_grid, std::span<const double> lambda_grid,
                                          std::uint64_t seed) {
    if (validation_hours == 0 || validation_hours + static_cast<std::size_t>(base.window) + 2 > series.size())
        throw InvalidArgument("series too short for the requested validation split");
    const std::size_t split = series.size() - validation_hours;
    std::vector<SweepPoint> out;
    for (int layers : layer_grid) {
        for (int width : width_grid) {
            for (double lambda : lambda_grid) {
                SweepPoint p;
                p.hyper = base;
                p.hyper.layers = layers;
                p.hyper.enhancement_nodes = width;
                p.hyper.regularization = lambda;
                const auto model = train_series_model(series.first(split), p.hyper, seed);
                const auto pred = one_step_forecast(model, series, 0.6);
                const std::span<const double> actual = series.subspan(split);
                const std::span<const double> fused = std::span<const double>(pred.fused).subspan(split);
                p.validation_rmse = compute_metrics(actual, fused).rmse;
                out.push_back(p);
            }
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const SweepPoint& a, const SweepPoint& b) { return a.validation_rmse < b.validation_rmse; });
    return out;
}

} // namespace gridsched::forecast
