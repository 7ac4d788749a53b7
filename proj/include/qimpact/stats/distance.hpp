// Pairwise coincidence rates versus qubit separation.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "qimpact/chip.hpp"
#include "qimpact/detector.hpp"
#include "qimpact/error.hpp"
#include "qimpact/stats/least_squares.hpp"

namespace qimpact::stats {

struct PairRate {
    QubitId a = 0;
    QubitId b = 0;
    double distance_mm = 0.0;
    std::size_t coincidences = 0;  // multi-qubit jumps containing both qubits
    double rate_per_hour = 0.0;
};

struct GaussianFalloffFit {
    double amplitude = 0.0;  // events per hour at zero separation
    double sigma_mm = 0.0;
    bool converged = false;
    bool underdetermined = false;  // fewer than two separations carry coincidences
    bool diverged = false;         // sigma ran away: no distance dependence

    bool usable() const {
        return converged && !underdetermined && !diverged && std::isfinite(sigma_mm) &&
               sigma_mm > 0.0;
    }
};

struct DistanceBin {
    double lo_mm = 0.0;
    double hi_mm = 0.0;
    std::size_t n_pairs = 0;
    double mean_rate_per_hour = 0.0;
};

struct DistanceReport {
    std::vector<PairRate> pairs;
    std::vector<DistanceBin> bins;
    GaussianFalloffFit fit;
};

/// Least-squares fit of rate = A exp(-d^2 / (2 sigma^2)) to (distance, rate) points.
inline GaussianFalloffFit fit_gaussian_falloff(const std::vector<double>& d,
                                               const std::vector<double>& rate) {
    GaussianFalloffFit fit;
    std::set<double> with_signal;
    double d_max = 0.0, r_max = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        d_max = std::max(d_max, d[i]);
        r_max = std::max(r_max, rate[i]);
        if (rate[i] > 0.0) with_signal.insert(std::round(d[i] * 1e6) / 1e6);
    }
    if (with_signal.size() < 2 || d.size() < 3) {
        fit.underdetermined = true;
        return fit;
    }
    auto residuals = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
        const double a = std::exp(x[0]);
        const double s = std::exp(x[1]);
        for (std::size_t i = 0; i < d.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = a * std::exp(-d[i] * d[i] / (2.0 * s * s)) - rate[i];
    };
    Eigen::VectorXd best(2);
    double best_cost = std::numeric_limits<double>::infinity();
    Eigen::VectorXd r(static_cast<Eigen::Index>(d.size()));
    for (double s_frac : {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 2.0}) {
        for (double a_frac : {0.5, 1.0, 2.0, 5.0}) {
            Eigen::VectorXd x(2);
            x << std::log(a_frac * r_max), std::log(s_frac * std::max(d_max, 1e-9));
            residuals(x, r);
            if (r.squaredNorm() < best_cost) {
                best_cost = r.squaredNorm();
                best = x;
            }
        }
    }
    const auto res = least_squares(residuals, best, static_cast<int>(d.size()));
    fit.amplitude = std::exp(res.params[0]);
    fit.sigma_mm = std::exp(res.params[1]);
    fit.converged = res.converged && std::isfinite(fit.sigma_mm);
    fit.diverged = !std::isfinite(fit.sigma_mm) || fit.sigma_mm > 10.0 * d_max;
    return fit;
}

/// For every pair of `qubits`, the rate of multi-qubit jumps containing both,
/// binned by separation and fitted with a Gaussian falloff.
inline DistanceReport coincidence_vs_distance(const std::vector<JumpCluster>& multi_qubit_jumps,
                                              const ChipLayout& layout,
                                              const std::vector<QubitId>& qubits,
                                              double detector_hours, double bin_width_mm = 1.0) {
    std::size_t n_multi = 0;
    for (const auto& c : multi_qubit_jumps) n_multi += c.multi_qubit() ? 1 : 0;
    if (n_multi == 0) throw Error(Errc::insufficient_data, "no multi-qubit jumps");
    if (!(detector_hours > 0.0)) throw Error(Errc::invalid_argument, "detector time must be positive");
    DistanceReport rep;
    for (std::size_t i = 0; i < qubits.size(); ++i) {
        for (std::size_t j = i + 1; j < qubits.size(); ++j) {
            PairRate p;
            p.a = qubits[i];
            p.b = qubits[j];
            p.distance_mm = distance(layout, p.a, p.b);
            for (const auto& c : multi_qubit_jumps)
                if (c.multi_qubit() && c.contains(p.a) && c.contains(p.b)) ++p.coincidences;
            p.rate_per_hour = static_cast<double>(p.coincidences) / detector_hours;
            rep.pairs.push_back(p);
        }
    }
    double d_max = 0.0;
    for (const auto& p : rep.pairs) d_max = std::max(d_max, p.distance_mm);
    const auto n_bins = static_cast<std::size_t>(std::floor(d_max / bin_width_mm)) + 1;
    rep.bins.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
        rep.bins[b].lo_mm = static_cast<double>(b) * bin_width_mm;
        rep.bins[b].hi_mm = static_cast<double>(b + 1) * bin_width_mm;
    }
    for (const auto& p : rep.pairs) {
        auto& bin = rep.bins[static_cast<std::size_t>(std::floor(p.distance_mm / bin_width_mm))];
        ++bin.n_pairs;
        bin.mean_rate_per_hour += p.rate_per_hour;
    }
    for (auto& bin : rep.bins)
        if (bin.n_pairs) bin.mean_rate_per_hour /= static_cast<double>(bin.n_pairs);

    std::vector<double> d, r;
    for (const auto& p : rep.pairs) {
        d.push_back(p.distance_mm);
        r.push_back(p.rate_per_hour);
    }
    rep.fit = fit_gaussian_falloff(d, r);
    return rep;
}

} // namespace qimpact::stats
