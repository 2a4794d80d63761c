#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "gridsched/error.hpp"

namespace gridsched::forecast {

/// Rank in a descending order: the largest value gets L, the smallest 1.
/// Ties go to the lower index.
inline std::vector<int> rank_descending(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    std::vector<int> rank(n);
    for (std::size_t pos = 0; pos < n; ++pos) rank[order[pos]] = static_cast<int>(n - pos);
    return rank;
}

/// What the fusion step remembers between calls: the layer predictions made
/// for the latest observed value, and that value.
struct FusionState {
    double alpha_trade = 0.6;
    std::vector<double> previous_predictions;
    double previous_actual = 0.0;
    bool has_previous = false;

    void record(std::span<const double> layer_predictions, double actual) {
        previous_predictions.assign(layer_predictions.begin(), layer_predictions.end());
        previous_actual = actual;
        has_previous = true;
    }
};

struct FusionResult {
    std::vector<double> weights;
    double combined = 0.0;
};

/// Ranking-based dynamic combination of layer outputs. Accuracy ranks come
/// from the latest squared error of each layer; diversity ranks combine the
/// spread of the current predictions with each layer's accuracy distance
/// from the median-ranked layer. Weights are proportional to the final rank.
/// Without a previous error the weights are uniform.
inline FusionResult fuse_predictions(std::span<const double> layer_preds, const FusionState& state) {
    const std::size_t n = layer_preds.size();
    if (n == 0) throw InvalidArgument("fusion needs at least one layer");
    FusionResult out;
    if (!state.has_previous || state.previous_predictions.size() != n) {
        out.weights.assign(n, 1.0 / static_cast<double>(n));
    } else {
        std::vector<double> accuracy(n), spread(n, 0.0);
        for (std::size_t l = 0; l < n; ++l) {
            const double e = state.previous_predictions[l] - state.previous_actual;
            accuracy[l] = 1.0 / std::max(e * e, 1e-300);
            for (std::size_t i = 0; i < n; ++i) spread[l] += std::abs(layer_preds[l] - layer_preds[i]);
        }
        const auto acc_rank = rank_descending(accuracy);
        const auto spread_rank = rank_descending(spread);

        const int mid_rank = static_cast<int>((n + 1) / 2); // ceil(L/2)
        const auto mid = static_cast<std::size_t>(std::find(acc_rank.begin(), acc_rank.end(), mid_rank) - acc_rank.begin());
        std::vector<double> deviation(n);
        for (std::size_t l = 0; l < n; ++l) deviation[l] = std::abs(accuracy[l] - accuracy[mid]);
        const auto deviation_rank = rank_descending(deviation);

        std::vector<double> diversity(n);
        double total = 0.0;
        for (std::size_t l = 0; l < n; ++l) total += spread_rank[l] + deviation_rank[l];
        for (std::size_t l = 0; l < n; ++l) diversity[l] = (spread_rank[l] + deviation_rank[l]) / total;
        const auto diversity_rank = rank_descending(diversity);

        std::vector<double> score(n);
        for (std::size_t l = 0; l < n; ++l)
            score[l] = state.alpha_trade * acc_rank[l] + (1.0 - state.alpha_trade) * diversity_rank[l];
        const auto final_rank = rank_descending(score);
        const double rank_sum = static_cast<double>(n * (n + 1)) / 2.0;
        out.weights.resize(n);
        for (std::size_t l = 0; l < n; ++l) out.weights[l] = final_rank[l] / rank_sum;
    }
    for (std::size_t l = 0; l < n; ++l) out.combined += out.weights[l] * layer_preds[l];
    return out;
}

} // namespace gridsched::forecast
