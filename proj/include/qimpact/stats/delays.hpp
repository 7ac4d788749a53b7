// Inter-jump delay histogram and the finite-window modified Poisson fit.
//
// For a Poisson process of characteristic time tau observed in windows of
// length T, consecutive delays D have density proportional to
//     exp(-D/tau) * (1 - D/T),   0 <= D <= T.
// Coincident triggers from one multi-qubit event add a point mass P_coinc at
// D = 0:
//     PDF(D) = N exp(-D/tau) (1 - D/T) (1 - P_coinc) + P_coinc delta(D)
// with N chosen so the continuous part integrates to one.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qimpact/error.hpp"
#include "qimpact/stats/least_squares.hpp"

namespace qimpact::stats {

struct DelayHistogram {
    double bin_width = 2.0;             // s; bins are [k w, (k+1) w)
    std::vector<std::size_t> counts;
    std::size_t total = 0;
    double max_delay = 0.0;
};

/// Consecutive differences of each run's sorted trigger times, pooled.
inline std::vector<double> consecutive_delays(const std::vector<std::vector<double>>& per_run) {
    std::vector<double> out;
    for (auto times : per_run) {
        std::sort(times.begin(), times.end());
        for (std::size_t i = 1; i < times.size(); ++i) out.push_back(times[i] - times[i - 1]);
    }
    return out;
}

inline DelayHistogram histogram_delays(const std::vector<double>& delays, double bin_width) {
    if (!(bin_width > 0.0)) throw Error(Errc::invalid_argument, "bin width must be positive");
    DelayHistogram h;
    h.bin_width = bin_width;
    for (double d : delays) {
        if (d < 0.0) throw Error(Errc::invalid_argument, "negative delay");
        const auto bin = static_cast<std::size_t>(std::floor(d / bin_width));
        if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
        ++h.counts[bin];
        ++h.total;
        h.max_delay = std::max(h.max_delay, d);
    }
    return h;
}

inline DelayHistogram delay_histogram(const std::vector<std::vector<double>>& trigger_times_per_run,
                                      double bin_width) {
    return histogram_delays(consecutive_delays(trigger_times_per_run), bin_width);
}

namespace detail {

/// 1 - (1 - exp(-x)) / x, accurate for small x.
inline double window_factor(double x) {
    if (x < 1e-3) return x / 2.0 - x * x / 6.0 + x * x * x / 24.0 - x * x * x * x / 120.0;
    return (x + std::expm1(-x)) / x;
}

} // namespace detail

/// Normalization N of the continuous part over [0, T].
inline double modified_poisson_norm(double tau, double T) {
    return 1.0 / (tau * detail::window_factor(T / tau));
}

/// Continuous part of the density (the point mass is excluded).
inline double modified_poisson_density(double delta, double tau, double p_coinc, double T) {
    if (delta < 0.0 || delta > T) return 0.0;
    return modified_poisson_norm(tau, T) * std::exp(-delta / tau) * (1.0 - delta / T) *
           (1.0 - p_coinc);
}

/// Probability mass of the continuous part on [0, a].
inline double modified_poisson_continuous_mass(double a, double tau, double p_coinc, double T) {
    a = std::clamp(a, 0.0, T);
    // integral of exp(-D/tau)(1 - D/T) over [0, a]
    const double e = std::exp(-a / tau);
    const double one_minus_e = -std::expm1(-a / tau);
    const double integral = tau * one_minus_e - (tau * tau * one_minus_e - tau * a * e) / T;
    return modified_poisson_norm(tau, T) * integral * (1.0 - p_coinc);
}

/// Cumulative probability including the point mass at zero.
inline double modified_poisson_cdf(double a, double tau, double p_coinc, double T) {
    if (a < 0.0) return 0.0;
    return p_coinc + modified_poisson_continuous_mass(a, tau, p_coinc, T);
}

struct DelayFit {
    double tau_jump = 0.0;
    double p_coinc = 0.0;
    double run_duration = 0.0;
    double bin_width = 0.0;
    double chi2 = 0.0;       // Pearson chi-square of the fitted bin counts
    std::size_t ndf = 0;
    bool converged = false;
};

/// Expected fraction of delays in each bin of width `w` covering [0, T).
inline std::vector<double> modified_poisson_bin_masses(double tau, double p_coinc, double T,
                                                       double w, std::size_t n_bins) {
    std::vector<double> m(n_bins);
    double prev = 0.0;
    for (std::size_t i = 0; i < n_bins; ++i) {
        const double hi = std::min(static_cast<double>(i + 1) * w, T);
        const double cur = modified_poisson_continuous_mass(hi, tau, p_coinc, T);
        m[i] = cur - prev + (i == 0 ? p_coinc : 0.0);
        prev = cur;
    }
    return m;
}

/// Fits (tau_jump, P_coinc) to bin counts by minimizing the Poisson deviance.
/// The point mass contributes only to the first bin.
inline DelayFit fit_modified_poisson(const DelayHistogram& h, double T) {
    if (!(T > 0.0)) throw Error(Errc::invalid_argument, "run duration must be positive");
    if (h.total == 0) throw Error(Errc::insufficient_data, "empty delay histogram");
    if (h.max_delay >= T) throw Error(Errc::invalid_argument, "delays must be shorter than T");
    const auto n_bins = static_cast<std::size_t>(std::ceil(T / h.bin_width - 1e-12));
    if (n_bins < 2) throw Error(Errc::insufficient_data, "degenerate histogram: a single bin");
    std::vector<double> obs(n_bins, 0.0);
    for (std::size_t i = 0; i < h.counts.size() && i < n_bins; ++i)
        obs[i] = static_cast<double>(h.counts[i]);
    const double n = static_cast<double>(h.total);

    auto unpack = [](const Eigen::VectorXd& x) {
        const double tau = std::exp(x[0]);
        const double p = 1.0 / (1.0 + std::exp(-x[1]));
        return std::pair{tau, p};
    };
    auto residuals = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
        const auto [tau, p] = unpack(x);
        const auto m = modified_poisson_bin_masses(tau, p, T, h.bin_width, n_bins);
        for (std::size_t i = 0; i < n_bins; ++i) {
            const double e = std::max(n * m[i], 1e-12);
            const double o = obs[i];
            const double dev = 2.0 * (e - o + (o > 0.0 ? o * std::log(o / e) : 0.0));
            r[static_cast<Eigen::Index>(i)] = (o >= e ? 1.0 : -1.0) * std::sqrt(std::max(dev, 0.0));
        }
    };

    // coarse grid for a robust start
    Eigen::VectorXd best(2);
    double best_cost = std::numeric_limits<double>::infinity();
    Eigen::VectorXd r(static_cast<Eigen::Index>(n_bins));
    for (double tau_frac : {0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.5, 3.0, 10.0}) {
        for (double p : {0.001, 0.05, 0.2, 0.4, 0.6, 0.8, 0.95}) {
            Eigen::VectorXd x(2);
            x << std::log(tau_frac * T), std::log(p / (1.0 - p));
            residuals(x, r);
            if (r.squaredNorm() < best_cost) {
                best_cost = r.squaredNorm();
                best = x;
            }
        }
    }
    const auto res = least_squares(residuals, best, static_cast<int>(n_bins));
    const auto [tau, p] = unpack(res.params);

    DelayFit fit;
    fit.tau_jump = tau;
    fit.p_coinc = p;
    fit.run_duration = T;
    fit.bin_width = h.bin_width;
    fit.converged = res.converged && std::isfinite(tau);
    const auto m = modified_poisson_bin_masses(tau, p, T, h.bin_width, n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        const double e = n * m[i];
        if (e > 0.0) fit.chi2 += (obs[i] - e) * (obs[i] - e) / e;
    }
    fit.ndf = n_bins > 2 ? n_bins - 2 : 0;
    return fit;
}

} // namespace qimpact::stats
