#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "qimpact/tls.hpp"

using namespace qimpact;

namespace {

const ChipLayout kLayout({{0, {0, 0}, true}, {1, {3, 0}, true}, {2, {20, 0}, true}});

TlsConfig small_tls(std::size_t iterations = 200) {
    TlsConfig t;
    t.n_iterations = iterations;
    t.monitored_qubit = 0;
    return t;
}

SimConfig quiet_sim(std::uint64_t seed = 1) {
    SimConfig s;
    s.seed = seed;
    s.impact_rate = 0;
    return s;
}

std::vector<double> mean_spectrum(const SpectrumSeries& s, std::size_t lo, std::size_t hi) {
    std::vector<double> m(s.n_steps(), 0.0);
    for (std::size_t it = lo; it < hi; ++it)
        for (std::size_t k = 0; k < s.n_steps(); ++k) m[k] += s.ms(it, k);
    for (double& v : m) v /= static_cast<double>(hi - lo);
    return m;
}

} // namespace

TEST(Stark, ShiftMatchesClosedForm) {
    // 300 * 20^2 / (2 * 50 * 250) = 4.8 MHz
    EXPECT_NEAR(stark_shift(20e6, 50e6, -300e6), 4.8e6, 1e-3);
    EXPECT_NEAR(stark_shift(20e6, -50e6, -300e6), -300e6 * 400e12 / (2 * -50e6 * -350e6), 1e-3);
    EXPECT_LT(stark_shift(20e6, -50e6, -300e6), 0.0);
}

TEST(Stark, QuadraticInAmplitude) {
    const double a = stark_shift(7e6, 50e6, -300e6);
    EXPECT_NEAR(stark_shift(14e6, 50e6, -300e6), 4 * a, 1e-9 * std::abs(a));
    EXPECT_NEAR(stark_shift(21e6, 50e6, -300e6), 9 * a, 1e-9 * std::abs(a));
}

TEST(Stark, SingularDetuningsThrow) {
    try {
        stark_shift(1e6, 0.0, -300e6);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::singular);
    }
    EXPECT_THROW(stark_shift(1e6, 300e6, -300e6), Error);
}

TEST(Stark, SweepCoversRangeSymmetrically) {
    const TlsConfig t;
    const auto s = stark_sweep(t);
    ASSERT_EQ(s.size(), t.n_steps);
    EXPECT_NEAR(s.front(), -t.shift_range, 1.0);
    EXPECT_NEAR(s.back(), t.shift_range, 1.0);
    EXPECT_NEAR(s[t.n_steps / 2], 0.0, 1e-6);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], -s[s.size() - 1 - i], 1e-3);
}

TEST(Survival, FlatWithoutTls) {
    const double base = std::exp(-50e-6 / 100e-6);
    for (double f : {-15e6, 0.0, 7e6}) EXPECT_NEAR(tls_survival(f, {}, 100e-6, 50e-6), base, 1e-15);
}

TEST(Survival, ResonanceReachesConfiguredDepth) {
    const std::vector<TlsLine> one{{3e6, 1e6, 0.6}};
    const double base = tls_survival(-100e6, {}, 100e-6, 50e-6);
    EXPECT_NEAR(tls_survival(3e6, one, 100e-6, 50e-6) / base, 0.4, 1e-12);
    // half the excess rate at half width
    EXPECT_NEAR(tls_survival(3.5e6, one, 100e-6, 50e-6) / base, std::sqrt(0.4), 1e-12);
}

TEST(Series, FlatSpectrumWithoutTls) {
    TlsConfig t = small_tls(400);
    t.tls_list.clear();
    const auto s = simulate_tls_series(t, quiet_sim(), kLayout);
    const auto m = mean_spectrum(s, 0, t.n_iterations);
    const double p = with_meas_error(std::exp(-0.5), 0.015);
    const double sd = std::sqrt(p * (1 - p) / 400.0);
    for (double v : m) EXPECT_NEAR(v, p, 5 * sd);
}

TEST(Series, StableSpectrumShowsDipAtLineCenter) {
    TlsConfig t = small_tls(400);
    t.tls_list = {{-14e6, 2e6, 0.8}};
    const auto s = simulate_tls_series(t, quiet_sim(), kLayout);
    const auto m = mean_spectrum(s, 0, t.n_iterations);
    const auto k = static_cast<std::size_t>(std::min_element(m.begin(), m.end()) - m.begin());
    EXPECT_NEAR(s.shifts[k], -14e6, 1e6);
    EXPECT_TRUE(s.scramble_iterations->empty());
}

TEST(Series, NearbyImpactScramblesLines) {
    TlsConfig t = small_tls(400);
    t.tls_list = {{-14e6, 1e6, 0.9}};
    SimConfig sim = quiet_sim(3);
    const double t_hit = 200.5 * t.iteration_period;
    const std::vector<ImpactEvent> hit{{t_hit, {0.5, 0}, 0.1, 1e-6}};
    const auto s = simulate_tls_series(t, sim, kLayout, hit);
    ASSERT_EQ(s.scramble_iterations->size(), 1u);
    EXPECT_EQ(s.scramble_iterations->front(), 201u);
    const auto before = mean_spectrum(s, 0, 200);
    const auto after = mean_spectrum(s, 201, 400);
    double diff = 0;
    for (std::size_t k = 0; k < before.size(); ++k) diff += std::abs(after[k] - before[k]);
    EXPECT_GT(diff / static_cast<double>(before.size()), 0.02);
}

TEST(Series, DistantImpactLeavesSpectrumAlone) {
    TlsConfig t = small_tls(100);
    const std::vector<ImpactEvent> far{{1.0, {20, 0}, 0.1, 1e-6}};
    const auto s = simulate_tls_series(t, quiet_sim(), kLayout, far);
    EXPECT_TRUE(s.scramble_iterations->empty());
    // the detector qubit under the impact still sees it
    const auto& d = s.detector(2);
    EXPECT_EQ(d.size(), t.n_iterations);
}

TEST(Series, DeterministicAndSeedSensitive) {
    const TlsConfig t = small_tls(50);
    SimConfig sim;
    sim.seed = 12;
    const auto a = simulate_tls_series(t, sim, kLayout);
    EXPECT_EQ(a, simulate_tls_series(t, sim, kLayout));
    sim.seed = 13;
    EXPECT_NE(a.frames, simulate_tls_series(t, sim, kLayout).frames);
}

TEST(Series, DiffusingLineMoves) {
    TlsConfig t = small_tls(2000);
    t.tls_list = {{0.0, 1e6, 0.9}};
    t.diffusing_tls = TlsWalk{0, 0.3e6};
    const auto s = simulate_tls_series(t, quiet_sim(7), kLayout);
    const auto early = mean_spectrum(s, 0, 100);
    const auto late = mean_spectrum(s, 1900, 2000);
    const auto ke = std::min_element(early.begin(), early.end()) - early.begin();
    const auto kl = std::min_element(late.begin(), late.end()) - late.begin();
    // rms displacement ~ 0.3 MHz * sqrt(1900) ~ 13 MHz
    EXPECT_NE(ke, kl);
}

TEST(Series, CentralQubitIsDefaultMonitor) {
    TlsConfig t = small_tls(5);
    t.monitored_qubit.reset();
    const ChipLayout l({{0, {0, 0}, true}, {1, {5, 5}, true}, {2, {10, 10}, true}});
    EXPECT_EQ(simulate_tls_series(t, quiet_sim(), l).monitored_qubit, 1);
}

TEST(Config, RejectsBadTlsSettings) {
    TlsConfig t;
    t.n_steps = 1;
    EXPECT_THROW(t.validate(), Error);
    t = TlsConfig{};
    t.tls_list.push_back({0, -1, 0.5});
    EXPECT_THROW(t.validate(), Error);
    t = TlsConfig{};
    t.diffusing_tls = TlsWalk{99, 1.0};
    EXPECT_THROW(t.validate(), Error);
}
