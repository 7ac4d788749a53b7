#include <gtest/gtest.h>

#include <random>

#include "qimpact/stats/scramble.hpp"

using namespace qimpact;
using namespace qimpact::stats;

TEST(Pearson, IdenticalAndAffineInputs) {
    const std::vector<double> x{1, 4, 2, 8, 5, 7};
    EXPECT_NEAR(*pearson_r(x, x), 1.0, 1e-15);
    std::vector<double> y, z;
    for (double v : x) {
        y.push_back(3.5 * v - 2.0);
        z.push_back(-0.2 * v + 9.0);
    }
    EXPECT_NEAR(*pearson_r(x, y), 1.0, 1e-15);
    EXPECT_NEAR(*pearson_r(x, z), -1.0, 1e-15);
}

TEST(Pearson, KnownValue) {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 5};
    EXPECT_NEAR(*pearson_r(x, y), 0.8, 1e-15);
}

TEST(Pearson, ConstantInputHasNoCorrelation) {
    const std::vector<double> x{1, 2, 3}, c{4, 4, 4};
    EXPECT_FALSE(pearson_r(x, c).has_value());
    EXPECT_FALSE(pearson_r(std::vector<double>{1}, std::vector<double>{2}).has_value());
}

TEST(Pearson, LengthMismatchThrows) {
    try {
        pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::length_mismatch);
    }
}

TEST(Pearson, AlwaysInUnitInterval) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int t = 0; t < 2000; ++t) {
        std::vector<double> x(7), y(7);
        for (auto& v : x) v = u(rng);
        for (std::size_t i = 0; i < 7; ++i) y[i] = (t % 2 ? 1e-9 : 1.0) * x[i] + u(rng) * 1e-12;
        const auto r = pearson_r(x, y);
        ASSERT_TRUE(r.has_value());
        EXPECT_GE(*r, -1.0);
        EXPECT_LE(*r, 1.0);
    }
}

TEST(WindowR, SlidingSumsMatchDirectComputation) {
    std::mt19937_64 rng(6);
    std::bernoulli_distribution b(0.4);
    const std::size_t n_steps = 9, n_it = 60, w = 7;
    BitVector frames(n_steps * n_it);
    std::vector<double> spectra(n_steps * n_it);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        frames.set(i, b(rng));
        spectra[i] = frames[i];
    }
    const auto fast = pearson_window_r(frames, n_steps, w);
    const auto fast_d = pearson_window_r(spectra, n_steps, w);
    ASSERT_EQ(fast.size(), n_it);
    for (std::size_t t = 0; t < n_it; ++t) {
        if (t < w || t + w > n_it) {
            EXPECT_FALSE(fast[t].has_value()) << t;
            continue;
        }
        std::vector<double> x(n_steps, 0.0), y(n_steps, 0.0);
        for (std::size_t i = t - w; i < t; ++i)
            for (std::size_t s = 0; s < n_steps; ++s) x[s] += spectra[i * n_steps + s];
        for (std::size_t i = t; i < t + w; ++i)
            for (std::size_t s = 0; s < n_steps; ++s) y[s] += spectra[i * n_steps + s];
        const auto direct = pearson_r(x, y);
        ASSERT_EQ(direct.has_value(), fast[t].has_value());
        if (direct) {
            EXPECT_NEAR(*fast[t], *direct, 1e-12);
            EXPECT_NEAR(*fast_d[t], *direct, 1e-9);
        }
    }
}

TEST(WindowR, ShapeErrors) {
    EXPECT_THROW(pearson_window_r(BitVector(10), 3, 2), Error);
    EXPECT_THROW(pearson_window_r(BitVector(9), 3, 0), Error);
    const auto r = pearson_window_r(BitVector(9), 3, 2);
    for (const auto& v : r) EXPECT_FALSE(v.has_value());
}

TEST(Classify, MatchesEpisodesToNearbyMultiQubitJumps) {
    std::vector<std::optional<double>> r(1000, 0.9);
    for (std::size_t t = 0; t < 3; ++t) r[t].reset();
    for (std::size_t t = 300; t < 310; ++t) r[t] = 0.3;
    r[304] = 0.1;
    for (std::size_t t = 700; t < 705; ++t) r[t] = 0.2;
    std::vector<JumpCluster> jumps;
    jumps.push_back({{{1, 420, 9}, {2, 421, 9}}, 420, 421});  // 116 from the first dip
    jumps.push_back({{{5, 200, 9}}, 200, 200});               // single-qubit, never matched
    jumps.push_back({{{3, 950, 9}, {4, 950, 9}}, 950, 950});  // too far from the second
    const auto rep = classify_scrambling(r, jumps, 1000);
    ASSERT_EQ(rep.episodes.size(), 2u);
    EXPECT_EQ(rep.episodes[0].iteration, 304u);
    EXPECT_DOUBLE_EQ(rep.episodes[0].r_min, 0.1);
    EXPECT_EQ(rep.episodes[0].episode_begin, 300u);
    EXPECT_EQ(rep.episodes[0].episode_end, 310u);
    EXPECT_TRUE(rep.episodes[0].is_scrambling());
    EXPECT_EQ(*rep.episodes[0].jump_index, 0u);
    EXPECT_FALSE(rep.episodes[1].is_scrambling());
    EXPECT_EQ(rep.n_scrambling, 1u);
    EXPECT_EQ(rep.n_multi_qubit_jumps, 2u);
    EXPECT_DOUBLE_EQ(rep.fraction_jumps_with_dip, 0.5);
    EXPECT_NEAR(rep.fraction_below, 15.0 / 997.0, 1e-15);
    EXPECT_EQ(rep.scrambling_events().size(), 1u);
}

TEST(Classify, EachJumpUsedOnce) {
    std::vector<std::optional<double>> r(500, 0.9);
    r[100] = 0.2;
    r[120] = 0.2;
    std::vector<JumpCluster> jumps{{{{1, 110, 9}, {2, 110, 9}}, 110, 110}};
    EXPECT_EQ(classify_scrambling(r, jumps, 500).n_scrambling, 1u);
}

TEST(Classify, LengthMismatchThrows) {
    std::vector<std::optional<double>> r(10, 0.9);
    try {
        classify_scrambling(r, {}, 11);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::length_mismatch);
    }
}
