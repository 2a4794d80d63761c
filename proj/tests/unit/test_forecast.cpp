#include <gtest/gtest.h>

#include <random>

#include "gridsched/forecast/forecaster.hpp"

using namespace gridsched;
using namespace gridsched::forecast;

namespace {
std::vector<double> daily_series(std::size_t days, std::uint64_t seed, double noise = 2.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise);
    std::vector<double> s(days * 24);
    for (std::size_t t = 0; t < s.size(); ++t)
        s[t] = 50.0 + 30.0 * std::sin(2.0 * M_PI * static_cast<double>(t % 24) / 24.0) + g(rng);
    return s;
}

EdRvflHyperparams small_hyper() {
    EdRvflHyperparams h;
    h.layers = 4;
    h.enhancement_nodes = 30;
    h.window = 24;
    h.regularization = 0.1;
    return h;
}
} // namespace

TEST(Metrics, HandValues) {
    const std::vector<double> actual{1.0, 2.0, 4.0}, pred{1.0, 1.0, 1.0};
    const auto m = compute_metrics(actual, pred);
    EXPECT_DOUBLE_EQ(m.mae, 4.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.rmse, std::sqrt(10.0 / 3.0));
    EXPECT_DOUBLE_EQ(m.mase, (4.0 / 3.0) / 1.5);
    EXPECT_DOUBLE_EQ(m.r_squared, 1.0 - 10.0 / (42.0 / 9.0));

    // with the preceding observation the scale is (1 + 1 + 2) / 3
    EXPECT_DOUBLE_EQ(compute_metrics(actual, pred, 0.0).mase, 1.0);
    // persistence scores exactly 1 under the preceding-value scale
    EXPECT_DOUBLE_EQ(compute_metrics(actual, std::vector<double>{0.0, 1.0, 2.0}, 0.0).mase, 1.0);
    EXPECT_THROW(compute_metrics(actual, std::vector<double>{1.0}), InvalidArgument);
}

TEST(Metrics, ScalerRoundTrip) {
    const MinMaxScaler s(-3.0, 7.0);
    for (double x : {-3.0, 0.0, 2.5, 7.0, 11.0}) EXPECT_NEAR(s.denormalize(s.normalize(x)), x, 1e-12);
    EXPECT_EQ(s.normalize(-3.0), 0.0);
    EXPECT_EQ(s.normalize(7.0), 1.0);
    EXPECT_THROW(MinMaxScaler(1.0, 1.0), InvalidArgument);
}

TEST(Ridge, PrimalDualAndNormalEquationsAgree) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (auto [rows, cols] : {std::pair{30, 8}, std::pair{8, 30}}) {
        Eigen::MatrixXd d(rows, cols);
        Eigen::VectorXd y(rows);
        for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = g(rng);
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = g(rng);
        const double lambda = 0.7;
        const Eigen::MatrixXd a = d.transpose() * d + lambda * Eigen::MatrixXd::Identity(cols, cols);
        const Eigen::VectorXd want = a.fullPivLu().solve(d.transpose() * y);
        EXPECT_LT((solve_ridge(d, y, lambda, RidgeForm::Primal) - want).norm(), 1e-9);
        EXPECT_LT((solve_ridge(d, y, lambda, RidgeForm::Dual) - want).norm(), 1e-9);
        EXPECT_LT((solve_ridge(d, y, lambda) - want).norm(), 1e-9);
    }
    EXPECT_THROW(solve_ridge(Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Ones(2), -1.0), InvalidArgument);
}

TEST(EdRvfl, FirstLayerReadoutIsRidgeOnHiddenAndRawInputs) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd x(60, 5);
    Eigen::VectorXd y(60);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = x.row(i).sum() / 5.0;
    auto hp = small_hyper();
    hp.window = 5;
    const auto model = train_edrvfl(x, y, hp, 11);
    ASSERT_EQ(model.layers(), hp.layers);
    EXPECT_EQ(model.hidden_weights[0].rows(), 5);
    EXPECT_EQ(model.hidden_weights[1].rows(), hp.enhancement_nodes + 5);

    const Eigen::MatrixXd h = (1.0 + (-(x * model.hidden_weights[0]).array()).exp()).inverse().matrix();
    Eigen::MatrixXd d(60, h.cols() + 5);
    d << h, x;
    const Eigen::MatrixXd a = d.transpose() * d + hp.regularization * Eigen::MatrixXd::Identity(d.cols(), d.cols());
    const Eigen::VectorXd beta = a.fullPivLu().solve(d.transpose() * y);
    EXPECT_LT((model.output_weights[0] - beta).norm(), 1e-8);
    for (int l = 0; l < hp.layers; ++l)
        EXPECT_LE(model.hidden_weights[static_cast<std::size_t>(l)].cwiseAbs().maxCoeff(), hp.input_scaling);
}

TEST(Fusion, HandComputedWeights) {
    FusionState st;
    st.alpha_trade = 0.6;
    EXPECT_EQ(fuse_predictions(std::vector<double>{1.0, 2.0, 3.0}, st).weights, (std::vector<double>(3, 1.0 / 3.0)));
    st.record(std::vector<double>{1.0, 2.0, 4.0}, 1.5);
    const auto r = fuse_predictions(std::vector<double>{1.0, 2.0, 3.0}, st);
    EXPECT_NEAR(r.weights[0], 0.5, 1e-15);
    EXPECT_NEAR(r.weights[1], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(r.weights[2], 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(r.combined, 5.0 / 3.0, 1e-12);
}

TEST(Fusion, WeightsAreAPermutationOfNormalizedRanks) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(10.0, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 12);
        std::vector<double> prev(n), now(n);
        for (auto& v : prev) v = g(rng);
        for (auto& v : now) v = g(rng);
        FusionState st;
        st.alpha_trade = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        st.record(prev, g(rng));
        const auto r = fuse_predictions(now, st);
        EXPECT_NEAR(std::accumulate(r.weights.begin(), r.weights.end(), 0.0), 1.0, 1e-12);
        auto w = r.weights;
        std::sort(w.begin(), w.end());
        const double rank_sum = static_cast<double>(n * (n + 1)) / 2.0;
        for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(w[k], static_cast<double>(k + 1) / rank_sum, 1e-15);
        EXPECT_GE(r.combined, *std::min_element(now.begin(), now.end()) - 1e-12);
        EXPECT_LE(r.combined, *std::max_element(now.begin(), now.end()) + 1e-12);
    }
}

TEST(Fusion, RankDescendingBreaksTiesByIndex) {
    EXPECT_EQ(rank_descending(std::vector<double>{2.0, 5.0, 2.0, 1.0}), (std::vector<int>{3, 4, 2, 1}));
}

TEST(Forecaster, PaddingUsesTheFirstDay) {
    std::vector<double> s(48);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i);
    EXPECT_EQ(padded_value(s, 5), 5.0);
    EXPECT_EQ(padded_value(s, -1), 23.0);
    EXPECT_EQ(padded_value(s, -24), 0.0);
    EXPECT_EQ(padded_value(s, -25), 23.0);
}

TEST(Forecaster, OracleTableRepeatsLastDayPastTheEnd) {
    std::vector<double> s(72);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i);
    const auto t = oracle_forecast(s);
    EXPECT_EQ(t[0][0], 1.0);
    EXPECT_EQ(t[10][22], 33.0);
    EXPECT_EQ(t[71][0], 48.0); // index 72 wraps to 48
    EXPECT_EQ(t[60][22], 59.0); // index 83 wraps to 59
}

TEST(Forecaster, OneStepFusionBeatsPersistenceOnDailyPattern) {
    const auto s = daily_series(20, 5);
    const std::size_t split = 16 * 24;
    const auto model = train_series_model(std::span<const double>(s).first(split), small_hyper(), 7);
    const auto r = one_step_forecast(model, s, 0.6);
    ASSERT_EQ(r.fused.size(), s.size());
    for (std::size_t t = 1; t < s.size(); ++t)
        EXPECT_NEAR(std::accumulate(r.weights[t].begin(), r.weights[t].end(), 0.0), 1.0, 1e-12);
    const std::span<const double> actual = std::span<const double>(s).subspan(split);
    const std::span<const double> fused = std::span<const double>(r.fused).subspan(split);
    EXPECT_LT(compute_metrics(actual, fused, s[split - 1]).mase, 1.0);
}

TEST(Forecaster, RecursiveFirstStepEqualsOneStep) {
    const auto s = daily_series(6, 8);
    const auto model = train_series_model(s, small_hyper(), 3);
    const auto one = one_step_forecast(model, s, 0.6);
    const auto table = recursive_forecast(model, s, 0.6, false);
    for (std::size_t t = 0; t + 1 < s.size(); ++t) EXPECT_NEAR(table[t][0], one.fused[t + 1], 1e-9) << "origin " << t;
}

TEST(Forecaster, DeterministicAndJsonRoundTrip) {
    const auto s = daily_series(6, 9);
    const auto a = train_series_model(s, small_hyper(), 42);
    const auto b = train_series_model(s, small_hyper(), 42);
    EXPECT_EQ(one_step_forecast(a, s, 0.6).fused, one_step_forecast(b, s, 0.6).fused);
    const auto c = edrvfl_from_json(nlohmann::json::parse(to_json(a).dump()));
    EXPECT_EQ(c.layers(), a.layers());
    const auto pa = one_step_forecast(a, s, 0.6).fused, pc = one_step_forecast(c, s, 0.6).fused;
    for (std::size_t t = 0; t < s.size(); ++t) EXPECT_NEAR(pa[t], pc[t], 1e-9);
    EXPECT_THROW(edrvfl_from_json(nlohmann::json{{"format", "x"}}), SchemaViolation);
}

TEST(Forecaster, NetLoadTableIsLoadMinusPv) {
    core::EnergyProfile p;
    p.load = daily_series(5, 1);
    p.pv.resize(p.load.size());
    for (std::size_t t = 0; t < p.pv.size(); ++t) p.pv[t] = std::max(0.0, 40.0 * std::sin(M_PI * ((t % 24) - 6.0) / 12.0));
    ForecasterConfig cfg;
    cfg.hyper = small_hyper();
    const auto f = train_net_load_forecaster(p, 96, cfg, 5);
    const auto table = net_load_table(f, p);
    const auto load = recursive_forecast(f.load_model, p.load, f.alpha_trade, true);
    const auto pv = recursive_forecast(f.pv_model, p.pv, f.alpha_trade, true);
    for (std::size_t t = 0; t < table.size(); t += 13)
        for (std::size_t k = 0; k < kForecastSteps; ++k) {
            EXPECT_EQ(table[t][k], load[t][k] - pv[t][k]);
            EXPECT_GE(pv[t][k], 0.0);
        }
}
