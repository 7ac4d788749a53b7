#include <gtest/gtest.h>

#include <random>

#include "qimpact/stats/distance.hpp"
#include "qimpact/stats/rate.hpp"

using namespace qimpact;
using namespace qimpact::stats;

struct RateRow {
    double tau_s;
    double area_mm2;
    double expected;  // 1e-3 / (s mm^2)
};

TEST(Rate, ReproducesReferenceComparisonRows) {
    const RateRow rows[] = {{16, 150, 0.4}, {50, 39, 0.5}, {10, 100, 1}, {10, 120, 0.8}, {20, 120, 0.4}};
    for (const auto& r : rows) {
        const double v = normalized_rate(r.tau_s, r.area_mm2) * 1e3;
        EXPECT_DOUBLE_EQ(round_significant(v, 1), r.expected) << r.tau_s << " s, " << r.area_mm2 << " mm2";
    }
}

TEST(Rate, RejectsNonPositiveInputs) {
    EXPECT_THROW(normalized_rate(0, 10), Error);
    EXPECT_THROW(normalized_rate(10, -1), Error);
    EXPECT_DOUBLE_EQ(normalized_rate(4, 0.25), 1.0);
}

TEST(Rate, SignificantRounding) {
    EXPECT_DOUBLE_EQ(round_significant(0.41666, 1), 0.4);
    EXPECT_DOUBLE_EQ(round_significant(0.83333, 1), 0.8);
    EXPECT_DOUBLE_EQ(round_significant(1234.5, 2), 1200);
    EXPECT_DOUBLE_EQ(round_significant(-0.0456, 2), -0.046);
    EXPECT_DOUBLE_EQ(round_significant(0.0, 3), 0.0);
}

TEST(GaussianFit, RecoversExactProfile) {
    std::vector<double> d, r;
    for (double x = 1.0; x <= 12.0; x += 0.5) {
        d.push_back(x);
        r.push_back(3.0 * std::exp(-x * x / (2 * 1.9 * 1.9)));
    }
    const auto f = fit_gaussian_falloff(d, r);
    ASSERT_TRUE(f.usable());
    EXPECT_NEAR(f.sigma_mm, 1.9, 1e-6);
    EXPECT_NEAR(f.amplitude, 3.0, 1e-5);
}

TEST(GaussianFit, TooFewSeparationsIsUnderdetermined) {
    EXPECT_TRUE(fit_gaussian_falloff({1, 2, 3}, {0, 0, 0}).underdetermined);
    EXPECT_TRUE(fit_gaussian_falloff({1, 2, 3}, {1, 0, 0}).underdetermined);
    EXPECT_TRUE(fit_gaussian_falloff({1, 2}, {1, 1}).underdetermined);
    EXPECT_FALSE(fit_gaussian_falloff({1, 2}, {1, 1}).usable());
}

TEST(GaussianFit, FlatRatesDiverge) {
    std::vector<double> d, r;
    for (double x = 1.0; x <= 10.0; x += 1.0) {
        d.push_back(x);
        r.push_back(1.0);
    }
    const auto f = fit_gaussian_falloff(d, r);
    EXPECT_TRUE(f.diverged);
    EXPECT_FALSE(f.usable());
}

TEST(Coincidence, CountsPairsInsideMultiQubitClusters) {
    const ChipLayout l({{0, {0, 0}, true}, {1, {1.5, 0}, true}, {2, {3, 0}, true}, {3, {9, 0}, true}});
    std::vector<JumpCluster> multi;
    multi.push_back({{{0, 10, 20}, {1, 11, 20}}, 10, 11});
    multi.push_back({{{0, 50, 20}, {1, 50, 20}, {2, 52, 20}}, 50, 52});
    multi.push_back({{{3, 90, 20}}, 90, 90});  // singleton, ignored
    const auto rep = coincidence_vs_distance(multi, l, {0, 1, 2, 3}, 0.5);
    ASSERT_EQ(rep.pairs.size(), 6u);
    EXPECT_EQ(rep.pairs[0].coincidences, 2u);  // 0-1
    EXPECT_DOUBLE_EQ(rep.pairs[0].rate_per_hour, 4.0);
    EXPECT_EQ(rep.pairs[1].coincidences, 1u);  // 0-2
    EXPECT_EQ(rep.pairs[2].coincidences, 0u);  // 0-3
    EXPECT_DOUBLE_EQ(rep.pairs[1].distance_mm, 3.0);
    ASSERT_EQ(rep.bins.size(), 10u);
    EXPECT_EQ(rep.bins[1].n_pairs, 2u);  // 1.5 mm pairs
    EXPECT_DOUBLE_EQ(rep.bins[1].mean_rate_per_hour, 3.0);
}

TEST(Coincidence, NoMultiQubitJumpsIsInsufficient) {
    const ChipLayout l({{0, {0, 0}, true}, {1, {1, 0}, true}});
    try {
        coincidence_vs_distance({}, l, {0, 1}, 1.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::insufficient_data);
    }
}
