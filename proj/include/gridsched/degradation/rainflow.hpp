#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace gridsched::degradation {

/// One counted cycle. A half cycle carries weight 0.5.
struct CycleRecord {
    double dod = 0.0;       ///< range between the two reversals
    double mean_soc = 0.0;
    double duration_s = 0.0;
    double weight = 1.0;
};

struct TurningPoint {
    std::size_t index;
    double value;
};

/// Reversal points of a series: plateaus collapse to their first sample,
/// first and last samples are always kept.
inline std::vector<TurningPoint> turning_points(std::span<const double> series) {
    std::vector<TurningPoint> distinct;
    distinct.reserve(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!distinct.empty() && series[i] == distinct.back().value) continue;
        distinct.push_back({i, series[i]});
    }
    if (distinct.size() <= 2) return distinct;
    std::vector<TurningPoint> tp;
    tp.push_back(distinct.front());
    for (std::size_t k = 1; k + 1 < distinct.size(); ++k) {
        const double a = distinct[k - 1].value, b = distinct[k].value, c = distinct[k + 1].value;
        if ((b - a) * (c - b) < 0.0) tp.push_back(distinct[k]);
    }
    tp.push_back(distinct.back());
    return tp;
}

/// Three-point (ASTM E1049) rainflow count over the reversals of a SoC
/// profile sampled every `dt_per_step_s` seconds. Closed inner ranges become
/// full cycles; ranges that include the starting point, and the residue,
/// become half cycles. Duration is the time between the two reversals that
/// bound the range.
inline std::vector<CycleRecord> rainflow_count(std::span<const double> soc_profile, double dt_per_step_s) {
    std::vector<CycleRecord> cycles;
    const auto tp = turning_points(soc_profile);
    if (tp.size() < 2) return cycles;

    auto make = [dt_per_step_s](const TurningPoint& a, const TurningPoint& b, double weight) {
        const double lo = a.index < b.index ? static_cast<double>(a.index) : static_cast<double>(b.index);
        const double hi = a.index < b.index ? static_cast<double>(b.index) : static_cast<double>(a.index);
        return CycleRecord{std::abs(a.value - b.value), 0.5 * (a.value + b.value), (hi - lo) * dt_per_step_s, weight};
    };

    std::vector<TurningPoint> stack;
    std::size_t start = 0; // stack[start] is the oldest unconsumed point
    for (const auto& p : tp) {
        stack.push_back(p);
        while (stack.size() - start >= 3) {
            const std::size_t n = stack.size();
            const double x = std::abs(stack[n - 1].value - stack[n - 2].value);
            const double y = std::abs(stack[n - 2].value - stack[n - 3].value);
            if (x < y) break;
            if (n - start == 3) {
                cycles.push_back(make(stack[n - 3], stack[n - 2], 0.5));
                ++start;
            } else {
                cycles.push_back(make(stack[n - 3], stack[n - 2], 1.0));
                stack.erase(stack.begin() + static_cast<std::ptrdiff_t>(n - 3),
                            stack.begin() + static_cast<std::ptrdiff_t>(n - 1));
            }
        }
    }
    for (std::size_t i = start; i + 1 < stack.size(); ++i) cycles.push_back(make(stack[i], stack[i + 1], 0.5));
    return cycles;
}

/// Equivalent cycle count (full = 1, half = 0.5).
inline double equivalent_cycles(std::span<const CycleRecord> cycles) {
    double n = 0.0;
    for (const auto& c : cycles) n += c.weight;
    return n;
}

} // namespace gridsched::degradation
