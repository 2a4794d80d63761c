#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "gridsched/error.hpp"
#include "gridsched/forecast/metrics.hpp"

namespace gridsched::forecast {

enum class Activation { Sigmoid, Relu, Tanh };

inline std::string_view to_string(Activation a) {
    switch (a) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    }
    return "sigmoid";
}

inline Activation activation_from_string(std::string_view s) {
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

struct EdRvflHyperparams {
    int layers = 10;
    int enhancement_nodes = 150;
    double regularization = 0.5;
    Activation activation = Activation::Sigmoid;
    double input_scaling = 1.0;
    int window = 48;
};

/// Deep random-vector functional-link ensemble. Every layer has a frozen
/// random hidden projection and its own closed-form ridge readout over
/// [hidden features, raw inputs].
struct EdRvflModel {
    EdRvflHyperparams hyper{};
    std::vector<Eigen::MatrixXd> hidden_weights; ///< layer 1: m x U, later: (U + m) x U
    std::vector<Eigen::VectorXd> output_weights; ///< (U + m)
    MinMaxScaler scaler{};
    int input_dim = 0;

    [[nodiscard]] int layers() const { return static_cast<int>(hidden_weights.size()); }
};

enum class RidgeForm { Auto, Primal, Dual };

/// Ridge readout. Primal when the design has no more columns than rows,
/// dual otherwise. Zero regularization falls back to the minimum-norm
/// least-squares (pseudo-inverse) solution.
inline Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, double lambda,
                                   RidgeForm form = RidgeForm::Auto) {
    if (lambda < 0.0) throw InvalidArgument("regularization must be nonnegative");
    if (lambda == 0.0) return d.completeOrthogonalDecomposition().solve(y);
    const bool primal = form == RidgeForm::Primal || (form == RidgeForm::Auto && d.cols() <= d.rows());
    if (primal) {
        Eigen::MatrixXd a = d.transpose() * d;
        a.diagonal().array() += lambda;
        return a.ldlt().solve(d.transpose() * y);
    }
    Eigen::MatrixXd a = d * d.transpose();
    a.diagonal().array() += lambda;
    return d.transpose() * a.ldlt().solve(y);
}

namespace detail {
inline void apply_activation(Eigen::MatrixXd& m, Activation a) {
    switch (a) {
    case Activation::Sigmoid: m = (1.0 + (-m.array()).exp()).inverse().matrix(); break;
    case Activation::Relu: m = m.cwiseMax(0.0); break;
    case Activation::Tanh: m = m.array().tanh().matrix(); break;
    }
}

inline Eigen::MatrixXd concat_cols(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}
} // namespace detail

/// Fits all layers on an already-scaled design matrix (rows are samples).
inline EdRvflModel train_edrvfl(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const EdRvflHyperparams& hp,
                                std::uint64_t seed) {
    if (x.rows() != y.size()) throw InvalidArgument("X and Y row counts differ");
    if (x.rows() == 0 || x.cols() == 0) throw InvalidArgument("empty training set");
    if (hp.layers < 1 || hp.enhancement_nodes < 1) throw InvalidArgument("need at least one layer and one node");
    EdRvflModel model;
    model.hyper = hp;
    model.input_dim = static_cast<int>(x.cols());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const Eigen::Index m = x.cols();
    const Eigen::Index u = hp.enhancement_nodes;

    Eigen::MatrixXd h;
    for (int l = 0; l < hp.layers; ++l) {
        const Eigen::Index in_dim = l == 0 ? m : u + m;
        Eigen::MatrixXd b(in_dim, u);
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, j) = hp.input_scaling * unif(rng);
        h = l == 0 ? Eigen::MatrixXd(x * b) : Eigen::MatrixXd(detail::concat_cols(h, x) * b);
        detail::apply_activation(h, hp.activation);
        const Eigen::MatrixXd d = detail::concat_cols(h, x);
        model.hidden_weights.push_back(std::move(b));
        model.output_weights.push_back(solve_ridge(d, y, hp.regularization));
    }
    return model;
}

/// Per-layer predictions for a batch of scaled input rows (n x m -> n x L).
inline Eigen::MatrixXd predict_layers_scaled(const EdRvflModel& model, const Eigen::MatrixXd& x) {
    if (x.cols() != model.input_dim) throw InvalidArgument("input width does not match the trained model");
    Eigen::MatrixXd out(x.rows(), model.layers());
    Eigen::MatrixXd h;
    for (int l = 0; l < model.layers(); ++l) {
        h = l == 0 ? Eigen::MatrixXd(x * model.hidden_weights[0])
                   : Eigen::MatrixXd(detail::concat_cols(h, x) * model.hidden_weights[static_cast<std::size_t>(l)]);
        detail::apply_activation(h, model.hyper.activation);
        out.col(l) = detail::concat_cols(h, x) * model.output_weights[static_cast<std::size_t>(l)];
    }
    return out;
}

/// Per-layer predictions in original units for one raw input window.
inline std::vector<double> predict_layers(const EdRvflModel& model, std::span<const double> window) {
    if (static_cast<int>(window.size()) != model.input_dim) throw InvalidArgument("window length mismatch");
    Eigen::MatrixXd x(1, model.input_dim);
    for (int i = 0; i < model.input_dim; ++i) x(0, i) = model.scaler.normalize(window[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd p = predict_layers_scaled(model, x);
    std::vector<double> out(static_cast<std::size_t>(p.cols()));
    for (Eigen::Index l = 0; l < p.cols(); ++l) out[static_cast<std::size_t>(l)] = model.scaler.denormalize(p(0, l));
    return out;
}

/// Sliding windows of length `window` and their next value.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> make_windows(std::span<const double> series, int window,
                                                                 const MinMaxScaler& scaler) {
    const auto n = static_cast<Eigen::Index>(series.size()) - window;
    if (window < 1 || n < 1) throw InvalidArgument("series shorter than one window plus target");
    Eigen::MatrixXd x(n, window);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        for (int c = 0; c < window; ++c) x(r, c) = scaler.normalize(series[static_cast<std::size_t>(r + c)]);
        y(r) = scaler.normalize(series[static_cast<std::size_t>(r + window)]);
    }
    return {std::move(x), std::move(y)};
}

/// Scales the series by its own range and fits a one-step-ahead model.
inline EdRvflModel train_series_model(std::span<const double> series, const EdRvflHyperparams& hp, std::uint64_t seed) {
    const auto scaler = MinMaxScaler::fit(series);
    auto [x, y] = make_windows(series, hp.window, scaler);
    auto model = train_edrvfl(x, y, hp, seed);
    model.scaler = scaler;
    return model;
}

// ---- JSON persistence ----------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data(m.data(), m.data() + m.size());
    j["data"] = std::move(data);
    return j;
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw SchemaViolation("matrix payload size mismatch");
    return Eigen::Map<const Eigen::MatrixXd>(data.data(), rows, cols);
}

inline nlohmann::json to_json(const EdRvflModel& m) {
    nlohmann::json j;
    j["format"] = "edrvfl";
    j["version"] = kModelFormatVersion;
    j["hyperparams"] = {{"layers", m.hyper.layers},
                        {"enhancement_nodes", m.hyper.enhancement_nodes},
                        {"regularization", m.hyper.regularization},
                        {"activation", std::string(to_string(m.hyper.activation))},
                        {"input_scaling", m.hyper.input_scaling},
                        {"window", m.hyper.window}};
    j["normalization"] = {{"x_min", m.scaler.x_min}, {"x_max", m.scaler.x_max}};
    j["input_dim"] = m.input_dim;
    auto& layers = j["layers"] = nlohmann::json::array();
    for (std::size_t l = 0; l < m.hidden_weights.size(); ++l) {
        layers.push_back({{"hidden", matrix_to_json(m.hidden_weights[l])},
                          {"output", matrix_to_json(Eigen::MatrixXd(m.output_weights[l]))}});
    }
    return j;
}

inline EdRvflModel edrvfl_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != "edrvfl") throw SchemaViolation("not an edRVFL model document");
        if (j.at("version").get<int>() != kModelFormatVersion) throw SchemaViolation("unsupported model version");
        EdRvflModel m;
        const auto& h = j.at("hyperparams");
        m.hyper.layers = h.at("layers").get<int>();
        m.hyper.enhancement_nodes = h.at("enhancement_nodes").get<int>();
        m.hyper.regularization = h.at("regularization").get<double>();
        m.hyper.activation = activation_from_string(h.at("activation").get<std::string>());
        m.hyper.input_scaling = h.at("input_scaling").get<double>();
        m.hyper.window = h.at("window").get<int>();
        m.scaler = MinMaxScaler(j.at("normalization").at("x_min").get<double>(),
                                j.at("normalization").at("x_max").get<double>());
        m.input_dim = j.at("input_dim").get<int>();
        for (const auto& layer : j.at("layers")) {
            m.hidden_weights.push_back(matrix_from_json(layer.at("hidden")));
            m.output_weights.push_back(matrix_from_json(layer.at("output")).col(0));
        }
        if (m.layers() != m.hyper.layers) throw SchemaViolation("layer count does not match hyperparameters");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaViolation(std::string("malformed model document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw SchemaViolation(std::string("malformed model document: ") + e.what());
    }
}

} // namespace gridsched::forecast
