#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "gridsched/degradation/aging.hpp"
#include "rainflow_reference.hpp"

using namespace gridsched;
using namespace gridsched::degradation;

namespace {
struct Key {
    double range, mean, weight;
    bool operator<(const Key& o) const {
        return std::tie(weight, range, mean) < std::tie(o.weight, o.range, o.mean);
    }
};

std::vector<Key> keys(const std::vector<CycleRecord>& cs) {
    std::vector<Key> k;
    for (const auto& c : cs) k.push_back({c.dod, c.mean_soc, c.weight});
    std::sort(k.begin(), k.end());
    return k;
}

std::vector<Key> keys(const std::vector<rainflow_reference::Cycle>& cs) {
    std::vector<Key> k;
    for (const auto& c : cs) k.push_back({c.range, c.mean, c.weight});
    std::sort(k.begin(), k.end());
    return k;
}
} // namespace

TEST(Chemistry, DodStressHandValues) {
    // LFP: k1 * d * exp(k2 * d); NMC: 1 / (k1 * d^k2 + k3)
    const double lfp = 9.05e-6 * 0.4 * std::exp(1.40 * 0.4);
    const double nmc = 1.0 / (1.47e4 * std::pow(0.4, -1.65) + 3.61e2);
    EXPECT_DOUBLE_EQ(dod_stress(lfp_params(), 0.4), lfp);
    EXPECT_DOUBLE_EQ(dod_stress(nmc_params(), 0.4), nmc);
    EXPECT_NEAR(nmc / lfp, 2.354, 0.01);
}

TEST(Chemistry, NmcZeroDepthLimit) {
    // negative exponent: the power term diverges, so stress tends to 0
    EXPECT_EQ(dod_stress(nmc_params(), 0.0), 0.0);
    EXPECT_LT(dod_stress(nmc_params(), 1e-9), 1e-12);
    EXPECT_EQ(dod_stress(lfp_params(), 0.0), 0.0);
}

TEST(Chemistry, StressFactorsAtReference) {
    const auto p = lfp_params();
    EXPECT_DOUBLE_EQ(soc_stress(p, p.sigma_ref), 1.0);
    EXPECT_DOUBLE_EQ(temperature_stress(p, p.T_ref), 1.0);
    EXPECT_DOUBLE_EQ(time_stress(p, 3600.0), 4.14e-10 * 3600.0);
}

TEST(Aging, FadeCurveEndpoints) {
    for (const auto& p : {lfp_params(), nmc_params()}) {
        EXPECT_NEAR(capacity_fade_from_stress(p, 0.0), 0.0, 1e-15);
        double prev = -1.0;
        for (double f = 0.0; f <= 10.0; f += 0.01) {
            const double q = capacity_fade_from_stress(p, f);
            EXPECT_GE(q, 0.0);
            EXPECT_LE(q, 1.0);
            EXPECT_GE(q, prev);
            prev = q;
        }
    }
}

TEST(Aging, CalendarFadeHandValue) {
    const auto p = lfp_params();
    const double expected = 5.98e6 * std::exp(0.69 * 0.5) * std::exp(-6.46e3 / 298.15) * std::sqrt(100.0);
    EXPECT_NEAR(calendar_fade(p, 0.5, 298.15, 100.0), expected, 1e-15);
    EXPECT_EQ(calendar_fade(p, 0.5, 298.15, 0.0), 0.0);
}

TEST(Aging, CalendarIncrementsTelescope) {
    const auto p = nmc_params();
    double total = 0.0;
    for (int d = 0; d < 30; ++d) total += calendar_fade_increment(p, 0.6, 308.15, d, d + 1);
    EXPECT_NEAR(total, calendar_fade(p, 0.6, 308.15, 30.0), 1e-14);
    EXPECT_THROW(calendar_fade_increment(p, 0.6, 308.15, 2.0, 1.0), InvalidArgument);
}

TEST(Rainflow, SimpleProfiles) {
    EXPECT_TRUE(rainflow_count(std::vector<double>{0.5}, 3600.0).empty());
    EXPECT_TRUE(rainflow_count(std::vector<double>{0.5, 0.5, 0.5}, 3600.0).empty());

    // one monotone swing is a half cycle
    auto c = rainflow_count(std::vector<double>{0.2, 0.5, 0.8}, 3600.0);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_DOUBLE_EQ(c[0].dod, 0.6);
    EXPECT_DOUBLE_EQ(c[0].weight, 0.5);
    EXPECT_DOUBLE_EQ(c[0].duration_s, 2 * 3600.0);

    // small inner cycle inside a large swing
    c = rainflow_count(std::vector<double>{0.1, 0.9, 0.6, 0.7, 0.2}, 3600.0);
    const auto full = std::count_if(c.begin(), c.end(), [](const CycleRecord& r) { return r.weight == 1.0; });
    EXPECT_EQ(full, 1);
    for (const auto& r : c)
        if (r.weight == 1.0) {
            EXPECT_NEAR(r.dod, 0.1, 1e-12);
            EXPECT_NEAR(r.mean_soc, 0.65, 1e-12);
        }
}

TEST(Rainflow, MatchesBruteForceReference) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> len(1, 64);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> s(static_cast<std::size_t>(len(rng)));
        for (auto& v : s) v = u(rng);
        const auto got = keys(rainflow_count(s, 3600.0));
        const auto want = keys(rainflow_reference::count(s));
        ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].weight, want[i].weight);
            EXPECT_NEAR(got[i].range, want[i].range, 1e-12);
            EXPECT_NEAR(got[i].mean, want[i].mean, 1e-12);
        }
    }
}

TEST(Rainflow, HalfCycleWeightsSumToHalfTheReversals) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(40);
        for (auto& v : s) v = u(rng);
        const auto tp = turning_points(s);
        const auto c = rainflow_count(s, 3600.0);
        // every reversal range is counted once: 2 per full cycle, 1 per half
        double ranges = 0.0;
        for (const auto& r : c) ranges += r.weight == 1.0 ? 2.0 : 1.0;
        EXPECT_EQ(ranges, static_cast<double>(tp.size() - 1));
    }
}

TEST(Aging, LedgerAccumulatesAndReplaces) {
    const auto p = lfp_params();
    AgingLedger ledger;
    std::vector<double> profile;
    for (int h = 0; h <= 24; ++h) profile.push_back(h % 2 == 0 ? 0.2 : 0.8);
    const auto a = apply_episode_aging(ledger, p, profile, 308.15, 1.0);
    EXPECT_GT(a.delta_q_cycle, 0.0);
    EXPECT_GT(a.delta_q_cal, 0.0);
    EXPECT_NEAR(ledger.soh, 1.0 - a.delta_q_cycle - a.delta_q_cal, 1e-15);

    const auto b = apply_episode_aging(ledger, p, profile, 308.15, 1.0);
    // the same stress later on the concave fade curve ages less
    EXPECT_LT(b.delta_q_cycle, a.delta_q_cycle);
    EXPECT_LT(b.delta_q_cal, a.delta_q_cal);

    AgingLedger worn;
    worn.cycle_fade = 0.15;
    worn.calendar_fade = 0.0505; // one episode away from end of life
    worn.cumulative_calendar_seconds = 1e8;
    worn.cumulative_cycle_stress = std::log(0.9425 / 0.85);
    const auto r = apply_episode_aging(worn, p, profile, 308.15, 1.0);
    EXPECT_TRUE(r.replaced);
    EXPECT_LE(r.soh_after, kEndOfLifeSoh);
    EXPECT_EQ(worn.soh, 1.0);
    EXPECT_EQ(worn.replacements, 1);
}

TEST(Aging, CoefficientUpdate) {
    core::BatterySpec s = core::default_ess_spec();
    // 910 * 1e-5 * 1000 / 200
    EXPECT_NEAR(update_degradation_coefficient(0.35, 1e-5, s, 200.0), 0.0455, 1e-12);
    EXPECT_EQ(update_degradation_coefficient(0.35, 1e-5, s, 0.0), 0.35);
    EXPECT_EQ(update_degradation_coefficient(0.35, 0.0, s, 100.0), 0.35);
}

TEST(Aging, CostAttribution) {
    const auto a = episode_cost_attribution(1.0, 2.0, 3.0, 4.0);
    EXPECT_EQ(a.building, 6.0);
    EXPECT_EQ(a.ev_user, 4.0);
    EXPECT_EQ(a.total, 10.0);
    const auto c = step_cycle_cost({0.35, 0.45}, -100.0, 50.0);
    EXPECT_DOUBLE_EQ(c.ess, 35.0);
    EXPECT_DOUBLE_EQ(c.ev, 22.5);
}
