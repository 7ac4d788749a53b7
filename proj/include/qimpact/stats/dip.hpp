// Trigger-aligned averaging of the fixed-delay T1 shots.
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "qimpact/bits.hpp"
#include "qimpact/detector.hpp"
#include "qimpact/error.hpp"
#include "qimpact/simulator.hpp"

namespace qimpact::stats {

/// Gaussian smoothing with mirrored ("reflect") boundaries and a 4-sigma kernel.
inline std::vector<double> gaussian_filter1d(const std::vector<double>& x, double sigma) {
    if (!(sigma > 0.0) || x.empty()) return x;
    const auto radius = static_cast<long>(4.0 * sigma + 0.5);
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    for (long i = -radius; i <= radius; ++i)
        kernel[static_cast<std::size_t>(i + radius)] =
            std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
    for (auto& k : kernel) k /= norm;
    const long n = static_cast<long>(x.size());
    auto reflect = [n](long i) {
        const long period = 2 * n;
        i %= period;
        if (i < 0) i += period;
        return i < n ? i : period - 1 - i;
    };
    std::vector<double> y(x.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k)
            acc += kernel[static_cast<std::size_t>(k + radius)] *
                   x[static_cast<std::size_t>(reflect(i + k))];
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

struct DipProfile {
    long window = 0;                  // offsets run from -window to +window
    std::vector<double> mean;         // averaged P(M0=1) per offset
    std::vector<std::size_t> counts;  // contributing shots per offset
    std::vector<double> smoothed;     // reporting only
    double background_mean = 0.0;
    double background_sigma = 0.0;
    double z_post = 0.0;              // z-score at offset 0, the first post-step repetition
    std::size_t n_events = 0;

    std::size_t index(long offset) const { return static_cast<std::size_t>(offset + window); }
    double at(long offset) const { return mean[index(offset)]; }
    double z(long offset) const { return (at(offset) - background_mean) / background_sigma; }

    /// Most negative z-score within +-reach of the trigger.
    std::pair<long, double> deepest_near_trigger(long reach) const {
        std::pair<long, double> best{0, z(0)};
        for (long o = -reach; o <= reach; ++o)
            if (o >= -window && o <= window && counts[index(o)] > 0 && z(o) < best.second)
                best = {o, z(o)};
        return best;
    }
};

/// Accumulates M0 shots around triggers. Sums are integers, so merging partial
/// accumulators in any order gives identical profiles.
class DipAccumulator {
public:
    explicit DipAccumulator(long window)
        : window_(window),
          ones_(static_cast<std::size_t>(2 * window + 1), 0),
          counts_(static_cast<std::size_t>(2 * window + 1), 0) {
        if (window < 1) throw Error(Errc::invalid_argument, "dip window must be positive");
    }

    void add(const BitVector& m0, std::size_t t_trigger) {
        const long n = static_cast<long>(m0.size());
        const long t = static_cast<long>(t_trigger);
        for (long o = -window_; o <= window_; ++o) {
            const long r = t + o;
            if (r < 0 || r >= n) continue;
            const auto i = static_cast<std::size_t>(o + window_);
            ones_[i] += m0[static_cast<std::size_t>(r)] ? 1u : 0u;
            ++counts_[i];
        }
        ++events_;
    }

    void merge(const DipAccumulator& other) {
        if (other.window_ != window_) throw Error(Errc::invalid_argument, "dip window mismatch");
        for (std::size_t i = 0; i < ones_.size(); ++i) {
            ones_[i] += other.ones_[i];
            counts_[i] += other.counts_[i];
        }
        events_ += other.events_;
    }

    std::size_t events() const { return events_; }

    /// Background statistics use every offset except 0; smoothing is for
    /// display and never enters the z-score.
    DipProfile finish(double smoothing_sigma = 10.0) const {
        if (events_ == 0) throw Error(Errc::insufficient_data, "no detections to align");
        DipProfile p;
        p.window = window_;
        p.n_events = events_;
        p.mean.assign(ones_.size(), 0.0);
        p.counts.assign(counts_.begin(), counts_.end());
        for (std::size_t i = 0; i < ones_.size(); ++i)
            if (counts_[i] > 0)
                p.mean[i] = static_cast<double>(ones_[i]) / static_cast<double>(counts_[i]);
        double sum = 0.0, sum2 = 0.0;
        std::size_t n = 0;
        for (long o = -window_; o <= window_; ++o) {
            const auto i = p.index(o);
            if (o == 0 || counts_[i] == 0) continue;
            sum += p.mean[i];
            ++n;
        }
        if (n < 2) throw Error(Errc::insufficient_data, "dip window has no background");
        p.background_mean = sum / static_cast<double>(n);
        for (long o = -window_; o <= window_; ++o) {
            const auto i = p.index(o);
            if (o == 0 || counts_[i] == 0) continue;
            sum2 += (p.mean[i] - p.background_mean) * (p.mean[i] - p.background_mean);
        }
        p.background_sigma = std::sqrt(sum2 / static_cast<double>(n - 1));
        p.z_post = p.z(0);
        p.smoothed = gaussian_filter1d(p.mean, smoothing_sigma);
        return p;
    }

private:
    long window_;
    std::vector<std::uint64_t> ones_;
    std::vector<std::uint64_t> counts_;
    std::size_t events_ = 0;
};

/// Aligns the M0 stream of each detection's qubit on its trigger and averages
/// across detections. `detections[i]` belongs to `runs[i]`.
inline DipProfile dip_aggregate(const std::vector<RunRecord>& runs,
                                const std::vector<std::vector<JumpDetection>>& detections,
                                long window, double smoothing_sigma = 10.0) {
    if (runs.size() != detections.size())
        throw Error(Errc::invalid_argument, "one detection list per run required");
    DipAccumulator acc(window);
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (const auto& d : detections[i])
            acc.add(runs[i].m0[runs[i].index_of(d.qubit_id)], d.t_trigger);
    if (acc.events() == 0) throw Error(Errc::insufficient_data, "no detections to align");
    return acc.finish(smoothing_sigma);
}

} // namespace qimpact::stats
