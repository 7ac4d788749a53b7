// Windowed spectrum correlation and TLS-scrambling classification.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "qimpact/bits.hpp"
#include "qimpact/detector.hpp"
#include "qimpact/error.hpp"

namespace qimpact::stats {

/// Pearson correlation of two equal-length vectors, or nullopt when either
/// has zero variance.
inline std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(Errc::length_mismatch, "pearson_r: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// r at iteration t between the mean spectrum over [t - window, t) and over
/// [t, t + window). Entries without a full window on both sides are absent.
/// `spectra` is iteration-major with `n_steps` values per iteration.
inline std::vector<std::optional<double>> pearson_window_r(std::span<const double> spectra,
                                                           std::size_t n_steps,
                                                           std::size_t window) {
    if (n_steps == 0 || spectra.size() % n_steps != 0)
        throw Error(Errc::length_mismatch, "spectra size is not a multiple of the step count");
    if (window == 0) throw Error(Errc::invalid_argument, "window must be positive");
    const std::size_t n_it = spectra.size() / n_steps;
    std::vector<std::optional<double>> r(n_it);
    if (n_it < 2 * window) return r;
    // running per-step sums of the two windows
    std::vector<double> before(n_steps, 0.0), after(n_steps, 0.0);
    for (std::size_t it = 0; it < window; ++it)
        for (std::size_t s = 0; s < n_steps; ++s) {
            before[s] += spectra[it * n_steps + s];
            after[s] += spectra[(it + window) * n_steps + s];
        }
    for (std::size_t t = window;; ++t) {
        r[t] = pearson_r(before, after);
        if (t + window >= n_it) break;
        for (std::size_t s = 0; s < n_steps; ++s) {
            const double enter = spectra[t * n_steps + s];
            before[s] += enter - spectra[(t - window) * n_steps + s];
            after[s] += spectra[(t + window) * n_steps + s] - enter;
        }
    }
    return r;
}

/// Same as above for 0/1 frames; integer window sums keep it exact.
inline std::vector<std::optional<double>> pearson_window_r(const BitVector& frames,
                                                           std::size_t n_steps,
                                                           std::size_t window) {
    if (n_steps == 0 || frames.size() % n_steps != 0)
        throw Error(Errc::length_mismatch, "frame count is not a multiple of the step count");
    if (window == 0) throw Error(Errc::invalid_argument, "window must be positive");
    const std::size_t n_it = frames.size() / n_steps;
    std::vector<std::optional<double>> r(n_it);
    if (n_it < 2 * window) return r;
    std::vector<long> before(n_steps, 0), after(n_steps, 0);
    auto bit = [&](std::size_t it, std::size_t s) { return frames[it * n_steps + s] ? 1L : 0L; };
    for (std::size_t it = 0; it < window; ++it)
        for (std::size_t s = 0; s < n_steps; ++s) {
            before[s] += bit(it, s);
            after[s] += bit(it + window, s);
        }
    std::vector<double> x(n_steps), y(n_steps);
    for (std::size_t t = window;; ++t) {
        for (std::size_t s = 0; s < n_steps; ++s) {
            x[s] = static_cast<double>(before[s]);
            y[s] = static_cast<double>(after[s]);
        }
        r[t] = pearson_r(x, y);
        if (t + window >= n_it) break;
        for (std::size_t s = 0; s < n_steps; ++s) {
            const long enter = bit(t, s);
            before[s] += enter - bit(t - window, s);
            after[s] += bit(t + window, s) - enter;
        }
    }
    return r;
}

struct ScrambleEvent {
    std::size_t iteration = 0;            // deepest point of the below-threshold episode
    double r_min = 0.0;
    std::size_t episode_begin = 0;
    std::size_t episode_end = 0;          // exclusive
    std::optional<std::size_t> jump_index;  // matched multi-qubit jump, if any

    bool is_scrambling() const { return jump_index.has_value(); }
};

struct ScrambleReport {
    std::vector<std::optional<double>> r;
    double threshold = 0.4;
    std::vector<std::size_t> flagged;      // iterations with r < threshold
    std::vector<ScrambleEvent> episodes;   // every below-threshold episode
    std::size_t n_scrambling = 0;
    std::size_t n_multi_qubit_jumps = 0;
    double fraction_below = 0.0;           // over iterations where r is defined
    double fraction_jumps_with_dip = 0.0;

    std::vector<ScrambleEvent> scrambling_events() const {
        std::vector<ScrambleEvent> out;
        for (const auto& e : episodes)
            if (e.is_scrambling()) out.push_back(e);
        return out;
    }
};

/// Groups consecutive flagged iterations into episodes and declares an
/// episode a scrambling event when a multi-qubit jump starts within
/// `tolerance` iterations of one of its flagged iterations. Each jump and each
/// episode is used at most once; pairs are assigned closest first, measured
/// from the episode's deepest point.
inline ScrambleReport classify_scrambling(std::vector<std::optional<double>> r,
                                          const std::vector<JumpCluster>& multi_qubit_jumps,
                                          std::size_t detector_length, double threshold,
                                          std::size_t tolerance) {
    if (r.size() != detector_length)
        throw Error(Errc::length_mismatch,
                    "spectroscopy and detector series have different lengths");
    ScrambleReport rep;
    rep.threshold = threshold;
    std::size_t defined = 0;
    for (std::size_t t = 0; t < r.size(); ++t) {
        if (!r[t]) continue;
        ++defined;
        if (*r[t] < threshold) rep.flagged.push_back(t);
    }
    rep.fraction_below =
        defined ? static_cast<double>(rep.flagged.size()) / static_cast<double>(defined) : 0.0;

    for (std::size_t k = 0; k < rep.flagged.size();) {
        std::size_t j = k;
        while (j + 1 < rep.flagged.size() && rep.flagged[j + 1] == rep.flagged[j] + 1) ++j;
        ScrambleEvent e;
        e.episode_begin = rep.flagged[k];
        e.episode_end = rep.flagged[j] + 1;
        e.iteration = e.episode_begin;
        e.r_min = *r[e.iteration];
        for (std::size_t t = e.episode_begin; t < e.episode_end; ++t)
            if (*r[t] < e.r_min) {
                e.r_min = *r[t];
                e.iteration = t;
            }
        rep.episodes.push_back(e);
        k = j + 1;
    }

    std::vector<std::size_t> multi;
    for (std::size_t i = 0; i < multi_qubit_jumps.size(); ++i)
        if (multi_qubit_jumps[i].multi_qubit()) multi.push_back(i);
    rep.n_multi_qubit_jumps = multi.size();
    struct Pair {
        std::size_t gap, episode, jump;
    };
    std::vector<Pair> pairs;
    for (std::size_t k = 0; k < rep.episodes.size(); ++k) {
        const auto& e = rep.episodes[k];
        for (std::size_t i : multi) {
            const std::size_t t = multi_qubit_jumps[i].start;
            const std::size_t to_episode =
                t < e.episode_begin ? e.episode_begin - t : (t >= e.episode_end ? t - e.episode_end + 1 : 0);
            if (to_episode > tolerance) continue;
            pairs.push_back({t > e.iteration ? t - e.iteration : e.iteration - t, k, i});
        }
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.gap < y.gap; });
    std::vector<bool> jump_used(multi_qubit_jumps.size(), false);
    for (const auto& p : pairs) {
        auto& e = rep.episodes[p.episode];
        if (e.jump_index || jump_used[p.jump]) continue;
        jump_used[p.jump] = true;
        e.jump_index = p.jump;
        ++rep.n_scrambling;
    }
    rep.fraction_jumps_with_dip =
        multi.empty() ? 0.0 : static_cast<double>(rep.n_scrambling) / static_cast<double>(multi.size());
    rep.r = std::move(r);
    return rep;
}

inline ScrambleReport classify_scrambling(std::vector<std::optional<double>> r,
                                          const std::vector<JumpCluster>& multi_qubit_jumps,
                                          std::size_t detector_length, double threshold = 0.4) {
    return classify_scrambling(std::move(r), multi_qubit_jumps, detector_length, threshold, 200);
}

} // namespace qimpact::stats
