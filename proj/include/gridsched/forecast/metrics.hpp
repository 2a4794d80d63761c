#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>

#include "gridsched/error.hpp"

namespace gridsched::forecast {

/// Min-max scaling to [0, 1] using training-set bounds.
struct MinMaxScaler {
    double x_min = 0.0;
    double x_max = 1.0;

    MinMaxScaler() = default;
    MinMaxScaler(double lo, double hi) : x_min(lo), x_max(hi) {
        if (!(hi > lo)) throw InvalidArgument("normalization bounds need x_max > x_min");
    }

    [[nodiscard]] double normalize(double x) const { return (x - x_min) / (x_max - x_min); }
    [[nodiscard]] double denormalize(double z) const { return z * (x_max - x_min) + x_min; }

    static MinMaxScaler fit(std::span<const double> xs) {
        if (xs.empty()) throw InvalidArgument("cannot fit scaler on an empty series");
        double lo = xs[0], hi = xs[0];
        for (double x : xs) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        if (hi == lo) hi = lo + 1.0; // constant series: any positive span works
        return {lo, hi};
    }
};

inline double normalize(double x, double x_min, double x_max) { return MinMaxScaler(x_min, x_max).normalize(x); }
inline double denormalize(double z, double x_min, double x_max) { return MinMaxScaler(x_min, x_max).denormalize(z); }

struct ForecastMetrics {
    double rmse = 0.0;
    double mae = 0.0;
    double mase = 0.0;
    double r_squared = 0.0;
};

namespace detail {
inline ForecastMetrics compute_metrics_impl(std::span<const double> actual, std::span<const double> predicted,
                                            std::optional<double> preceding) {
    if (actual.size() != predicted.size() || actual.empty())
        throw InvalidArgument("metrics need equal, nonzero lengths");
    const auto n = static_cast<double>(actual.size());
    double se = 0.0, ae = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = predicted[i] - actual[i];
        se += e * e;
        ae += std::abs(e);
        mean += actual[i];
    }
    mean /= n;
    double ss_tot = 0.0;
    for (double a : actual) ss_tot += (a - mean) * (a - mean);

    // MASE scale: mean absolute first difference of the actual series.
    double diff_sum = 0.0;
    std::size_t diff_count = 0;
    if (preceding) {
        diff_sum += std::abs(actual[0] - *preceding);
        ++diff_count;
    }
    for (std::size_t i = 1; i < actual.size(); ++i) {
        diff_sum += std::abs(actual[i] - actual[i - 1]);
        ++diff_count;
    }
    if (diff_count == 0) throw InvalidArgument("MASE needs at least two actual values");

    ForecastMetrics m;
    m.rmse = std::sqrt(se / n);
    m.mae = ae / n;
    const double scale = diff_sum / static_cast<double>(diff_count);
    if (scale > 0.0)
        m.mase = m.mae / scale;
    else
        m.mase = m.mae == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    if (ss_tot > 0.0)
        m.r_squared = 1.0 - se / ss_tot;
    else
        m.r_squared = se == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return m;
}
} // namespace detail

/// RMSE, MAE, MASE and R^2. The MASE denominator is the mean absolute
/// first difference of `actual`.
inline ForecastMetrics compute_metrics(std::span<const double> actual, std::span<const double> predicted) {
    return detail::compute_metrics_impl(actual, predicted, std::nullopt);
}

/// Same, with the observation preceding the window included in the MASE
/// scale so that a one-step persistence forecast scores exactly 1.
inline ForecastMetrics compute_metrics(std::span<const double> actual, std::span<const double> predicted,
                                       double preceding_actual) {
    return detail::compute_metrics_impl(actual, predicted, preceding_actual);
}

} // namespace gridsched::forecast
