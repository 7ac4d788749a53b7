// Matched-filter charge-jump detection.
//
// Pipeline per qubit and run:
//   jump_signal        |trace (x) step template|, valid region only
//   normalize_by_median  divide by the median of the valid region
//   find_triggers      thresholded local maxima with a minimum separation
// and across qubits:
//   cluster_jumps      chain triggers closer than the clustering gap
//
// The step template has half-width w samples: -1 on the w samples before the
// output index and +1 on the w samples starting at it. An ideal step whose
// first post-step sample is k therefore peaks uniquely at k with value w.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <type_traits>
#include <numeric>
#include <span>
#include <vector>

#include "qimpact/bits.hpp"
#include "qimpact/chip.hpp"
#include "qimpact/error.hpp"

namespace qimpact {

struct DetectorParams {
    double template_half_width = 0.025;  // s
    double threshold = 14.0;
    double min_separation = 0.050;       // s
    double cluster_gap = 0.010;          // s
    bool averaged_mode = false;
    std::size_t averaged_template_len = 200;  // iterations
    double averaged_threshold = 8.0;
    // Iteration-quantized triggers need wider refractory and clustering windows.
    double averaged_min_separation = 4.8;     // s
    double averaged_cluster_gap = 0.25;       // s
    std::vector<QubitId> excluded_qubits;

    void validate() const {
        if (!(template_half_width > 0.0) || !(threshold > 0.0) || !(min_separation > 0.0) ||
            !(cluster_gap > 0.0) || !(averaged_threshold > 0.0) || averaged_template_len < 2 ||
            !(averaged_min_separation > 0.0) || !(averaged_cluster_gap > 0.0))
            throw Error(Errc::invalid_argument, "detector parameters must be positive");
    }

    bool excluded(QubitId id) const {
        return std::find(excluded_qubits.begin(), excluded_qubits.end(), id) !=
               excluded_qubits.end();
    }

    friend bool operator==(const DetectorParams&, const DetectorParams&) = default;
};

/// Detector parameters expressed in samples of a trace with a given period.
struct SampleParams {
    std::size_t half_width = 0;
    double threshold = 0.0;
    std::size_t min_separation = 1;  // peaks closer than this many samples conflict
    double cluster_gap = 0.0;        // seconds
    double sample_period = 0.0;      // seconds
};

inline SampleParams resolve(const DetectorParams& p, double sample_period) {
    p.validate();
    if (!(sample_period > 0.0)) throw Error(Errc::invalid_argument, "sample period must be positive");
    SampleParams s;
    s.sample_period = sample_period;
    double min_sep = p.min_separation;
    if (p.averaged_mode) {
        s.half_width = p.averaged_template_len / 2;
        s.threshold = p.averaged_threshold;
        s.cluster_gap = p.averaged_cluster_gap;
        min_sep = p.averaged_min_separation;
    } else {
        s.half_width = static_cast<std::size_t>(std::llround(p.template_half_width / sample_period));
        s.threshold = p.threshold;
        s.cluster_gap = p.cluster_gap;
    }
    s.half_width = std::max<std::size_t>(s.half_width, 1);
    s.min_separation = static_cast<std::size_t>(std::ceil(min_sep / sample_period - 1e-9));
    s.min_separation = std::max<std::size_t>(s.min_separation, 1);
    return s;
}

/// Jump signal over a trace. Entries outside [valid_begin, valid_end) are zero
/// and never searched for peaks.
struct JumpSignal {
    std::vector<double> values;
    std::size_t valid_begin = 0;
    std::size_t valid_end = 0;
    double median = 0.0;      // set by normalize_by_median
    bool degenerate = false;  // median was zero; values left at zero
};

namespace detail {

template <class Trace>
double sample_value(const Trace& t, std::size_t i) {
    return static_cast<double>(t[i]);
}

/// Median of a range; even sizes average the two middle values. Signals
/// from 0/1 traces hold small integers, which a counting pass handles exactly.
template <class It>
double median(It first, It last) {
    const auto m = static_cast<std::size_t>(last - first);
    double hi = 0.0;
    bool integral = true;
    for (It it = first; it != last && integral; ++it) {
        integral = *it >= 0.0 && *it == std::floor(*it) && *it < 1e6;
        hi = std::max(hi, *it);
    }
    if (integral) {
        std::vector<std::size_t> count(static_cast<std::size_t>(hi) + 1, 0);
        for (It it = first; it != last; ++it) ++count[static_cast<std::size_t>(*it)];
        // k-th smallest (0-based)
        auto kth = [&](std::size_t k) {
            std::size_t seen = 0;
            for (std::size_t v = 0; v < count.size(); ++v) {
                seen += count[v];
                if (seen > k) return static_cast<double>(v);
            }
            return hi;
        };
        return m % 2 ? kth(m / 2) : 0.5 * (kth(m / 2 - 1) + kth(m / 2));
    }
    std::vector<double> tmp(first, last);
    std::nth_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(m / 2), tmp.end());
    double med = tmp[m / 2];
    if (m % 2 == 0) {
        const double lower = *std::max_element(tmp.begin(), tmp.begin() + static_cast<std::ptrdiff_t>(m / 2));
        med = 0.5 * (med + lower);
    }
    return med;
}

} // namespace detail

/// |correlation| of a 0/1 or probability trace with the step template of the
/// given half-width. Trace must be longer than the template.
template <class Trace>
JumpSignal jump_signal(const Trace& trace, std::size_t half_width) {
    const std::size_t n = trace.size();
    const std::size_t w = half_width;
    if (w == 0) throw Error(Errc::invalid_argument, "template half-width must be positive");
    if (n <= 2 * w) throw Error(Errc::invalid_argument, "trace shorter than the step template");
    JumpSignal js;
    js.values.assign(n, 0.0);
    js.valid_begin = w;
    js.valid_end = n - w + 1;
    auto fill = [&](const auto& prefix) {
        for (std::size_t k = js.valid_begin; k < js.valid_end; ++k) {
            const double after = static_cast<double>(prefix[k + w] - prefix[k]);
            const double before = static_cast<double>(prefix[k] - prefix[k - w]);
            js.values[k] = std::abs(after - before);
        }
    };
    if constexpr (std::is_same_v<Trace, BitVector>) {
        // integer counts are exact and cheaper to accumulate
        std::vector<std::int64_t> prefix(n + 1, 0);
        const auto& words = trace.words();
        for (std::size_t i = 0; i < n; ++i)
            prefix[i + 1] = prefix[i] + static_cast<std::int64_t>((words[i >> 6] >> (i & 63)) & 1u);
        fill(prefix);
    } else {
        std::vector<double> prefix(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + detail::sample_value(trace, i);
        fill(prefix);
    }
    return js;
}

template <class Trace>
JumpSignal jump_signal(const Trace& trace, const SampleParams& p) {
    return jump_signal(trace, p.half_width);
}

/// Divides the valid region by its median. An all-zero median leaves the
/// signal at zero and sets `degenerate`.
inline JumpSignal normalize_by_median(JumpSignal js) {
    const auto first = js.values.begin() + static_cast<std::ptrdiff_t>(js.valid_begin);
    const auto last = js.values.begin() + static_cast<std::ptrdiff_t>(js.valid_end);
    if (first >= last) {
        js.degenerate = true;
        return js;
    }
    const double med = detail::median(first, last);
    js.median = med;
    if (!(med > 0.0)) {
        js.degenerate = true;
        std::fill(js.values.begin(), js.values.end(), 0.0);
        return js;
    }
    for (auto it = first; it != last; ++it) *it /= med;
    return js;
}

/// Convenience overload for a plain signal: every entry is valid.
inline JumpSignal normalize_by_median(std::span<const double> signal) {
    JumpSignal js;
    js.values.assign(signal.begin(), signal.end());
    js.valid_begin = 0;
    js.valid_end = js.values.size();
    return normalize_by_median(std::move(js));
}

struct JumpDetection {
    QubitId qubit_id = 0;
    std::size_t t_trigger = 0;  // sample index of the first post-step sample
    double peak_value = 0.0;

    friend bool operator==(const JumpDetection&, const JumpDetection&) = default;
};

/// Leftmost sample of every plateau that is strictly higher than both
/// neighbours and at least `floor`. Plateaus touching the valid-region edge
/// are not peaks.
inline std::vector<std::size_t> local_maxima(const JumpSignal& js,
                                             double floor = -std::numeric_limits<double>::infinity()) {
    std::vector<std::size_t> peaks;
    const auto& v = js.values;
    const std::size_t b = js.valid_begin, e = js.valid_end;
    std::size_t i = b;
    while (i < e) {
        // a plateau's leftmost sample is reached before the rest of it, so
        // skipping samples below the floor never splits one
        if (v[i] < floor) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < e && v[j + 1] == v[i]) ++j;
        const bool left_lower = i > b && v[i - 1] < v[i];
        const bool right_lower = j + 1 < e && v[j + 1] < v[i];
        if (left_lower && right_lower && v[i] > 0.0) peaks.push_back(i);
        i = j + 1;
    }
    return peaks;
}

/// Thresholded peaks with a minimum separation: among conflicting peaks the
/// largest survives, equal heights keep the earlier one.
inline std::vector<JumpDetection> find_triggers(const JumpSignal& normalized, double threshold,
                                                std::size_t min_separation, QubitId qubit = 0) {
    std::vector<std::size_t> cand;
    for (std::size_t i : local_maxima(normalized, threshold)) cand.push_back(i);
    std::vector<std::size_t> by_height(cand.size());
    std::iota(by_height.begin(), by_height.end(), std::size_t{0});
    std::stable_sort(by_height.begin(), by_height.end(), [&](std::size_t a, std::size_t b) {
        return normalized.values[cand[a]] > normalized.values[cand[b]];
    });
    std::vector<bool> keep(cand.size(), true);
    for (std::size_t r : by_height) {
        if (!keep[r]) continue;
        for (std::size_t j = r; j-- > 0 && cand[r] - cand[j] < min_separation;) keep[j] = false;
        for (std::size_t j = r + 1; j < cand.size() && cand[j] - cand[r] < min_separation; ++j)
            keep[j] = false;
    }
    std::vector<JumpDetection> out;
    for (std::size_t k = 0; k < cand.size(); ++k)
        if (keep[k]) out.push_back({qubit, cand[k], normalized.values[cand[k]]});
    return out;
}

inline std::vector<JumpDetection> find_triggers(const JumpSignal& normalized, const SampleParams& p,
                                                QubitId qubit = 0) {
    return find_triggers(normalized, p.threshold, p.min_separation, qubit);
}

/// Group of detections chained by gaps below the clustering gap.
struct JumpCluster {
    std::vector<JumpDetection> members;  // sorted by trigger time
    std::size_t start = 0;
    std::size_t end = 0;

    bool multi_qubit() const { return members.size() >= 2; }
    bool contains(QubitId id) const {
        return std::any_of(members.begin(), members.end(),
                           [id](const JumpDetection& d) { return d.qubit_id == id; });
    }
};

struct ClusteredJumps {
    std::vector<JumpCluster> clusters;  // chronological; singletons included

    std::vector<JumpCluster> multi_qubit() const {
        std::vector<JumpCluster> out;
        for (const auto& c : clusters)
            if (c.multi_qubit()) out.push_back(c);
        return out;
    }
    std::vector<JumpDetection> singletons() const {
        std::vector<JumpDetection> out;
        for (const auto& c : clusters)
            if (!c.multi_qubit()) out.push_back(c.members.front());
        return out;
    }
};

/// Chain clustering: consecutive triggers (sorted by time) closer than
/// `cluster_gap` seconds share a cluster. Chains may grow arbitrarily long.
inline ClusteredJumps cluster_jumps(std::vector<JumpDetection> detections, double cluster_gap,
                                    double sample_period) {
    std::stable_sort(detections.begin(), detections.end(),
                     [](const JumpDetection& a, const JumpDetection& b) {
                         return a.t_trigger != b.t_trigger ? a.t_trigger < b.t_trigger
                                                           : a.qubit_id < b.qubit_id;
                     });
    ClusteredJumps out;
    for (const auto& d : detections) {
        const bool joins =
            !out.clusters.empty() &&
            static_cast<double>(d.t_trigger - out.clusters.back().end) * sample_period < cluster_gap;
        if (!joins) out.clusters.push_back({{}, d.t_trigger, d.t_trigger});
        auto& c = out.clusters.back();
        c.members.push_back(d);
        c.end = d.t_trigger;
    }
    return out;
}

inline ClusteredJumps cluster_jumps(std::vector<JumpDetection> detections, const SampleParams& p) {
    return cluster_jumps(std::move(detections), p.cluster_gap, p.sample_period);
}

/// Full single-trace pipeline.
template <class Trace>
std::vector<JumpDetection> detect_trace(const Trace& trace, const SampleParams& p, QubitId qubit) {
    return find_triggers(normalize_by_median(jump_signal(trace, p)), p, qubit);
}

/// Averaged-mode detection on per-iteration P(MR=1) values: template length and
/// threshold come from the averaged settings, timing resolution is one
/// iteration.
inline std::vector<JumpDetection> averaged_detect(std::span<const double> detector_probs,
                                                  const DetectorParams& params,
                                                  double iteration_period, QubitId qubit = 0) {
    if (!params.averaged_mode)
        throw Error(Errc::invalid_argument, "averaged_detect requires averaged_mode");
    const SampleParams sp = resolve(params, iteration_period);
    return detect_trace(detector_probs, sp, qubit);
}

inline DetectorParams averaged_params(DetectorParams p = {}) {
    p.averaged_mode = true;
    return p;
}

} // namespace qimpact
