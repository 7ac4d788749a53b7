#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <random>

#include "qimpact/stats/dip.hpp"

using namespace qimpact;
using namespace qimpact::stats;

namespace {

BitVector bernoulli_trace(std::size_t n, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution b(p);
    BitVector v(n);
    for (std::size_t i = 0; i < n; ++i) v.set(i, b(rng));
    return v;
}

} // namespace

TEST(Smoothing, MatchesReflectBoundaryReference) {
    const auto y = gaussian_filter1d({1, 2, 3, 4, 5}, 1.0);
    const std::vector<double> want{1.42704095, 2.06782203, 3.0, 3.93217797, 4.57295905};
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], want[i], 1e-8);
}

TEST(Smoothing, PreservesConstantsAndSkipsZeroSigma) {
    const std::vector<double> c(50, 0.7);
    for (double v : gaussian_filter1d(c, 10.0)) EXPECT_NEAR(v, 0.7, 1e-14);
    const std::vector<double> x{3, 1, 2};
    EXPECT_EQ(gaussian_filter1d(x, 0.0), x);
}

TEST(Dip, InjectedDipGivesLargeNegativeZ) {
    std::mt19937_64 rng(1);
    DipAccumulator acc(100);
    for (int e = 0; e < 200; ++e) {
        BitVector m0 = bernoulli_trace(1000, 0.67, rng);
        m0.set(500, false);
        acc.add(m0, 500);
    }
    const DipProfile p = acc.finish();
    EXPECT_EQ(p.n_events, 200u);
    EXPECT_DOUBLE_EQ(p.at(0), 0.0);
    EXPECT_LT(p.z_post, -10.0);
    EXPECT_EQ(p.deepest_near_trigger(3).first, 0);
    EXPECT_NEAR(p.background_mean, 0.67, 0.01);
}

TEST(Dip, NullZScoresAreStandardNormal) {
    // 400 independent null profiles; the z at offset 0 should be close to N(0, 1)
    std::mt19937_64 rng(2);
    std::vector<double> z;
    for (int trial = 0; trial < 400; ++trial) {
        DipAccumulator acc(100);
        for (int e = 0; e < 300; ++e) acc.add(bernoulli_trace(201, 0.67, rng), 100);
        z.push_back(acc.finish().z_post);
    }
    std::sort(z.begin(), z.end());
    const boost::math::normal_distribution<double> nd;
    double d = 0;
    const double n = static_cast<double>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double f = boost::math::cdf(nd, z[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    // KS critical value at alpha = 0.01
    EXPECT_LT(d, 1.63 / std::sqrt(n));
}

TEST(Dip, EdgeTriggersCountOnlyInRangeShots) {
    std::mt19937_64 rng(3);
    DipAccumulator acc(10);
    const BitVector m0 = bernoulli_trace(50, 0.5, rng);
    acc.add(m0, 2);
    acc.add(m0, 30);
    const DipProfile p = acc.finish(0.0);
    EXPECT_EQ(p.counts[p.index(-10)], 1u);
    EXPECT_EQ(p.counts[p.index(0)], 2u);
    EXPECT_EQ(p.counts[p.index(10)], 2u);
}

TEST(Dip, MergeOrderDoesNotMatter) {
    std::mt19937_64 rng(4);
    std::vector<DipAccumulator> parts(5, DipAccumulator(50));
    for (auto& a : parts)
        for (int e = 0; e < 7; ++e) a.add(bernoulli_trace(400, 0.6, rng), 100 + 20 * e);
    DipAccumulator fwd(50), rev(50);
    for (auto& a : parts) fwd.merge(a);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) rev.merge(*it);
    const DipProfile a = fwd.finish(), b = rev.finish();
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.z_post, b.z_post);
    EXPECT_EQ(a.smoothed, b.smoothed);
    EXPECT_THROW(fwd.merge(DipAccumulator(10)), Error);
}

TEST(Dip, NoEventsIsInsufficient) {
    try {
        DipAccumulator(10).finish();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::insufficient_data);
    }
    EXPECT_THROW(DipAccumulator(0), Error);
}

TEST(Dip, AggregateUsesDetectingQubitsStream) {
    RunRecord r;
    r.qubit_ids = {4, 9};
    r.m0 = {BitVector(300), BitVector(300)};
    for (std::size_t i = 0; i < 300; ++i) r.m0[1].set(i, i != 150);
    const DipProfile p = dip_aggregate({r}, {{{9, 150, 20.0}}}, 20);
    EXPECT_DOUBLE_EQ(p.at(0), 0.0);
    EXPECT_DOUBLE_EQ(p.at(5), 1.0);
    EXPECT_THROW(dip_aggregate({r}, {}, 20), Error);
}
