#include <gtest/gtest.h>

#include <boost/math/special_functions/gamma.hpp>
#include <filesystem>
#include <random>

#include "gridsched/agent/checkpoint.hpp"

using namespace gridsched;
using namespace gridsched::agent;

namespace {
using DMatrix = QMatrix<double>;

NetworkArch tiny_arch(bool dueling, bool center = false) { return {6, {7, 5}, 4, dueling, center}; }

double& entry(Parameters<double>& p, std::size_t layer, bool bias, Eigen::Index k) {
    return bias ? p.biases[layer](k) : p.weights[layer].data()[k];
}

AgentConfig small_agent(Variant v) {
    AgentConfig c;
    c.variant = v;
    c.hidden = {16, 16};
    c.batch_size = 8;
    c.buffer_capacity = 64;
    c.episodes = 10;
    c.seed = 3;
    return c;
}

std::array<double, env::kStateDim> random_features(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::array<double, env::kStateDim> f{};
    for (auto& v : f) v = u(rng);
    return f;
}
} // namespace

class GradientCheck : public ::testing::TestWithParam<bool> {};

TEST_P(GradientCheck, BackpropMatchesCentralDifferences) {
    const auto arch = tiny_arch(GetParam());
    auto p = Parameters<double>::initialize(arch, 7);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Eigen::Index n = 5;
    DMatrix x(arch.input_dim, n);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    const std::vector<int> actions{0, 3, 1, 2, 3};
    const std::vector<double> targets{0.5, -1.0, 2.0, 0.1, 0.0};
    const std::vector<double> weights{1.0, 0.3, 0.7, 0.9, 0.5};

    const auto res = weighted_td_loss<double>(arch, p, x, actions, targets, weights);
    const double h = 1e-6;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        for (bool bias : {false, true}) {
            const Eigen::Index count = bias ? p.biases[l].size() : p.weights[l].size();
            for (Eigen::Index k = 0; k < count; ++k) {
                const double saved = entry(p, l, bias, k);
                entry(p, l, bias, k) = saved + h;
                const double up = weighted_td_loss<double>(arch, p, x, actions, targets, weights).loss;
                entry(p, l, bias, k) = saved - h;
                const double down = weighted_td_loss<double>(arch, p, x, actions, targets, weights).loss;
                entry(p, l, bias, k) = saved;
                const double numeric = (up - down) / (2.0 * h);
                const double analytic = bias ? res.gradient.biases[l](k) : res.gradient.weights[l].data()[k];
                const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
                EXPECT_LE(std::abs(numeric - analytic) / scale, 1e-4) << "layer " << l << (bias ? " bias " : " weight ") << k;
            }
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Heads, GradientCheck, ::testing::Values(false, true));

TEST(Network, TdErrorsAndLossDefinition) {
    const auto arch = tiny_arch(true);
    const auto p = Parameters<double>::initialize(arch, 2);
    DMatrix x = DMatrix::Ones(arch.input_dim, 2);
    x(0, 1) = -1.0;
    const auto q = forward<double>(arch, p, x);
    const auto r = weighted_td_loss<double>(arch, p, x, {1, 2}, {1.0, -1.0}, {0.5, 1.0});
    EXPECT_NEAR(r.td_errors[0], 1.0 - q(1, 0), 1e-12);
    EXPECT_NEAR(r.td_errors[1], -1.0 - q(2, 1), 1e-12);
    EXPECT_NEAR(r.loss, (std::pow(0.5 * r.td_errors[0], 2) + std::pow(r.td_errors[1], 2)) / 2.0, 1e-12);
}

TEST(Network, CenteringShiftsAllActionsEqually) {
    const auto p = Parameters<double>::initialize(tiny_arch(true), 4);
    DMatrix x = DMatrix::Random(6, 3);
    const auto plain = forward<double>(tiny_arch(true, false), p, x);
    const auto centered = forward<double>(tiny_arch(true, true), p, x);
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        const Eigen::VectorXd d = plain.col(i) - centered.col(i);
        EXPECT_NEAR(d.maxCoeff(), d.minCoeff(), 1e-12);
    }
}

TEST(TdTarget, VariantsAndTerminal) {
    Eigen::VectorXd online(25), target(25);
    for (int a = 0; a < 25; ++a) {
        online(a) = a == 3 ? 10.0 : 0.0;
        target(a) = a == 7 ? 5.0 : 1.0;
    }
    const auto all = env::full_mask();
    EXPECT_EQ(td_target(Variant::DQN, 2.0, true, 0.9, online, target, all), 2.0);
    EXPECT_DOUBLE_EQ(td_target(Variant::DQN, 2.0, false, 0.9, online, target, all), 2.0 + 0.9 * 5.0);
    EXPECT_DOUBLE_EQ(td_target(Variant::D2QN, 2.0, false, 0.9, online, target, all), 2.0 + 0.9 * 1.0);
    auto mask = all;
    mask[7] = false;
    EXPECT_DOUBLE_EQ(td_target(Variant::DQN, 2.0, false, 0.9, online, target, mask), 2.0 + 0.9 * 1.0);

    // identical networks: double Q collapses to the plain max
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd q(25);
        for (int a = 0; a < 25; ++a) q(a) = g(rng);
        EXPECT_EQ(td_target(Variant::D2QN, 0.3, false, 0.99, q, q, all), td_target(Variant::DQN, 0.3, false, 0.99, q, q, all));
    }
    mask.fill(false);
    EXPECT_THROW(td_target(Variant::DQN, 0.0, false, 0.9, online, target, mask), InvalidArgument);
}

TEST(SegmentTree, SumsAndPrefixSearchMatchLinearScan) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    SegmentTree sum(37, false), mx(37, true);
    std::vector<double> v(37);
    for (int round = 0; round < 500; ++round) {
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, 36)(rng);
        v[i] = u(rng);
        sum.set(i, v[i]);
        mx.set(i, v[i]);
        const double total = std::accumulate(v.begin(), v.end(), 0.0);
        EXPECT_NEAR(sum.root(), total, 1e-9);
        EXPECT_EQ(mx.root(), *std::max_element(v.begin(), v.end()));
        const double mass = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t want = 0;
        for (double acc = v[0]; acc <= mass && want + 1 < v.size(); acc += v[++want]) {}
        EXPECT_EQ(sum.find_prefix(mass), want);
    }
}

TEST(Replay, PrioritizedSamplingFollowsPriorities) {
    ReplayBuffer buf({50, true, 0.95, 1e-3});
    for (int i = 0; i < 50; ++i) buf.push(Transition{});
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> td(-2.0, 2.0);
    std::vector<double> expected(50);
    double z = 0.0;
    for (std::size_t i = 0; i < 50; ++i) {
        const double d = i == 0 ? 0.0 : td(rng);
        buf.update_priority(i, d);
        expected[i] = std::pow(std::abs(d) + 1e-3, 0.95);
        z += expected[i];
    }
    for (std::size_t i = 0; i < 50; ++i) EXPECT_NEAR(buf.probability(i), expected[i] / z, 1e-12);

    const std::size_t draws = 100000;
    std::vector<double> counts(50, 0.0);
    for (std::size_t k = 0; k < draws / 1000; ++k) {
        const auto b = buf.sample(1000, 0.5, rng);
        for (std::size_t j = 0; j < b.indices.size(); ++j) {
            counts[b.indices[j]] += 1.0;
            EXPECT_LE(b.weights[j], 1.0);
            EXPECT_NEAR(b.probabilities[j], buf.probability(b.indices[j]), 1e-15);
        }
    }
    // pool tiny-expectation cells so every cell expects at least 5 draws
    double stat = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < 50; ++i) {
        const double e = buf.probability(i) * draws;
        if (e < 5.0) {
            pooled_obs += counts[i];
            pooled_exp += e;
            continue;
        }
        stat += (counts[i] - e) * (counts[i] - e) / e;
        ++cells;
    }
    if (pooled_exp > 0.0) {
        stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++cells;
    }
    const double p_value = boost::math::gamma_q((cells - 1) / 2.0, stat / 2.0);
    EXPECT_GT(p_value, 0.01) << "chi2 = " << stat << " over " << cells << " cells";
}

TEST(Replay, ImportanceWeightsNormalizedByBatchMax) {
    ReplayBuffer buf({8, true, 1.0, 1e-3});
    for (int i = 0; i < 8; ++i) buf.push(Transition{});
    for (std::size_t i = 0; i < 8; ++i) buf.update_priority(i, static_cast<double>(i));
    std::mt19937_64 rng(1);
    const auto b = buf.sample(64, 0.7, rng);
    double wmax = 0.0;
    for (std::size_t k = 0; k < 64; ++k) wmax = std::max(wmax, std::pow(1.0 / (8.0 * b.probabilities[k]), 0.7));
    for (std::size_t k = 0; k < 64; ++k)
        EXPECT_NEAR(b.weights[k], std::pow(1.0 / (8.0 * b.probabilities[k]), 0.7) / wmax, 1e-12);
}

TEST(Replay, NewItemsTakeMaxPriorityAndRingOverwrites) {
    ReplayBuffer buf({4, true, 0.95, 1e-3});
    Transition t;
    buf.push(t);
    EXPECT_EQ(buf.priority(0), 1.0);
    buf.update_priority(0, 3.0);
    buf.push(t);
    EXPECT_NEAR(buf.priority(1), 3.001, 1e-12);
    for (int i = 0; i < 3; ++i) {
        t.action = 10 + i;
        buf.push(t);
    }
    EXPECT_EQ(buf.size(), 4u);
    EXPECT_EQ(buf.at(0).action, 12);

    ReplayBuffer uniform({4, false, 0.95, 1e-3});
    uniform.push(t);
    uniform.push(t);
    EXPECT_EQ(uniform.probability(1), 0.5);
}

TEST(Schedules, TargetSyncAndEpsilon) {
    for (int k = 1; k <= 200; ++k) EXPECT_EQ(should_sync_target(k, 16), k % 16 == 1);
    AgentConfig c;
    EXPECT_EQ(epsilon_schedule(c, 0), 1.0);
    EXPECT_DOUBLE_EQ(epsilon_schedule(c, 10), std::pow(0.99, 10));
    EXPECT_EQ(epsilon_schedule(c, 100000), c.epsilon_min);
    c.episodes = 11;
    EXPECT_DOUBLE_EQ(alpha_dev_schedule(c, 0), 0.4);
    EXPECT_DOUBLE_EQ(alpha_dev_schedule(c, 10), 0.99);
    EXPECT_DOUBLE_EQ(alpha_dev_schedule(c, 5), 0.695);
}

TEST(Agent, TargetCopiedOnlyOnSyncEpisodes) {
    DqnAgent a(small_agent(Variant::D3QNPER));
    std::mt19937_64 rng(3);
    for (int ep = 1; ep <= 34; ++ep) {
        for (int k = 0; k < 10; ++k) {
            const auto s = random_features(rng), sn = random_features(rng);
            a.remember(s, static_cast<std::size_t>(k % 25), 1.0, sn, env::full_mask(), k == 9);
            a.learn();
        }
        const bool synced = a.end_episode();
        EXPECT_EQ(synced, ep % 16 == 1);
        EXPECT_EQ(a.online().weights[0] == a.target().weights[0], synced) << "episode " << ep;
        EXPECT_DOUBLE_EQ(a.epsilon(), epsilon_schedule(a.config(), ep));
    }
}

TEST(Adam, MatchesTextbookUpdate) {
    const NetworkArch arch{1, {1}, 1, false, false};
    auto p = Parameters<double>::zeros_like(arch);
    auto g = Parameters<double>::zeros_like(arch);
    auto s = AdamState<double>::zeros_like(arch);
    const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
    double theta = 0.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 5; ++t) {
        const double grad = 0.5 * t - 1.2;
        g.weights[0](0, 0) = grad;
        adam_update<double>(p, g, s, cfg);
        m = 0.9 * m + 0.1 * grad;
        v = 0.999 * v + 0.001 * grad * grad;
        const double mhat = m / (1.0 - std::pow(0.9, t)), vhat = v / (1.0 - std::pow(0.999, t));
        theta -= 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
        EXPECT_NEAR(p.weights[0](0, 0), theta, 1e-12);
    }
    EXPECT_EQ(s.step, 5);
}

TEST(Agent, MaskedActionsNeverChosen) {
    DqnAgent a(small_agent(Variant::DQN));
    std::mt19937_64 rng(9);
    for (int i = 0; i < 500; ++i) {
        env::ActionMask m{};
        m[static_cast<std::size_t>(i % 25)] = true;
        m[static_cast<std::size_t>((i * 7) % 25)] = true;
        const auto f = random_features(rng);
        const auto act = a.act(f, m, i % 2 == 0 ? 1.0 : 0.0);
        EXPECT_TRUE(m[act]);
    }
}

TEST(Agent, LearnsOneStepBandit) {
    auto c = small_agent(Variant::D3QNPER);
    c.learning_rate = 1e-2;
    c.reward_scale = 1.0;
    DqnAgent a(c);
    std::mt19937_64 rng(5);
    std::array<double, env::kStateDim> s{};
    s[0] = 1.0;
    for (int k = 0; k < 1500; ++k) {
        const auto act = static_cast<std::size_t>(k % 25);
        a.remember(s, act, act == 17 ? 1.0 : 0.0, s, env::full_mask(), true);
        a.learn();
    }
    EXPECT_EQ(a.greedy(s, env::full_mask()), 17u);
}

TEST(Checkpoint, RoundTripPreservesEverything) {
    DqnAgent a(small_agent(Variant::D3QN));
    std::mt19937_64 rng(4);
    for (int k = 0; k < 40; ++k) {
        a.remember(random_features(rng), static_cast<std::size_t>(k % 25), 0.5, random_features(rng), env::full_mask(), false);
        a.learn();
    }
    a.end_episode();
    const auto path = std::filesystem::temp_directory_path() / "gridsched_ckpt_test.json";
    save_checkpoint(a, path);
    const auto b = load_checkpoint(path);
    std::filesystem::remove(path);
    EXPECT_EQ(b.epsilon(), a.epsilon());
    EXPECT_EQ(b.episodes_done(), 1);
    EXPECT_EQ(b.adam().step, a.adam().step);
    for (std::size_t l = 0; l < a.online().weights.size(); ++l) {
        EXPECT_EQ(a.online().weights[l], b.online().weights[l]);
        EXPECT_EQ(a.target().biases[l], b.target().biases[l]);
        EXPECT_EQ(a.adam().v.weights[l], b.adam().v.weights[l]);
    }
    const auto f = random_features(rng);
    EXPECT_EQ(a.q_values(f), b.q_values(f));

    auto j = checkpoint_to_json(a);
    j["architecture"]["hidden"] = std::vector<int>{3};
    EXPECT_THROW(checkpoint_from_json(j), SchemaViolation);
    EXPECT_THROW(checkpoint_from_json(nlohmann::json{{"format", "other"}}), SchemaViolation);
    EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), ConfigUnreadable);
}
