// End-to-end analysis: detection over runs, timing accuracy against ground
// truth, and the replication study that feeds every statistic from one pass.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qimpact/chip.hpp"
#include "qimpact/detector.hpp"
#include "qimpact/error.hpp"
#include "qimpact/io/config_file.hpp"
#include "qimpact/simulator.hpp"
#include "qimpact/stats/delays.hpp"
#include "qimpact/stats/dip.hpp"
#include "qimpact/stats/distance.hpp"
#include "qimpact/stats/scramble.hpp"
#include "qimpact/tls.hpp"

namespace qimpact {

#ifdef QIMPACT_DATA_DIR
inline std::string default_layout_path() { return std::string(QIMPACT_DATA_DIR) + "/falcon27_layout.csv"; }
#else
inline std::string default_layout_path() { return "data/falcon27_layout.csv"; }
#endif

/// Runs f(0..n-1) on up to `workers` threads. Results come back in index
/// order and each depends only on its index, so the worker count cannot
/// change them. The lowest-index exception is rethrown.
template <class F>
auto parallel_map(std::size_t n, std::size_t workers, F&& f) {
    using R = decltype(f(std::size_t{0}));
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                slots[i].emplace(f(i));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

struct RunDetections {
    std::vector<JumpDetection> detections;  // all qubits, sorted by (t, qubit)
    ClusteredJumps clusters;
};

/// Detection on the M1 streams of every non-excluded qubit, once per
/// threshold. The jump signal is computed once per qubit and shared.
inline std::vector<RunDetections> detect_run_thresholds(const RunRecord& rec,
                                                        const DetectorParams& params,
                                                        const std::vector<double>& thresholds) {
    const SampleParams sp = resolve(params, rec.config.rep_period);
    std::vector<RunDetections> out(thresholds.size());
    for (std::size_t q = 0; q < rec.qubit_ids.size(); ++q) {
        const QubitId id = rec.qubit_ids[q];
        if (params.excluded(id)) continue;
        const JumpSignal js = normalize_by_median(jump_signal(rec.m1[q], sp));
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
            auto d = find_triggers(js, thresholds[k], sp.min_separation, id);
            out[k].detections.insert(out[k].detections.end(), d.begin(), d.end());
        }
    }
    for (auto& rd : out) {
        rd.clusters = cluster_jumps(rd.detections, sp);
        rd.detections.clear();
        for (const auto& c : rd.clusters.clusters)
            rd.detections.insert(rd.detections.end(), c.members.begin(), c.members.end());
    }
    return out;
}

inline RunDetections detect_run(const RunRecord& rec, const DetectorParams& params) {
    return std::move(detect_run_thresholds(rec, params, {params.threshold}).front());
}

// ---------------------------------------------------------------------------
// Timing accuracy

/// Offsets t_trigger - r_true between each detection and the repetition of
/// the nearest true impact. Detections farther than `max_offset` from every
/// impact are treated as unmatched and skipped.
inline std::vector<long> timing_deviations(const std::vector<JumpDetection>& detections,
                                           const std::vector<ImpactEvent>& impacts,
                                           const SimConfig& cfg, long max_offset) {
    std::vector<long> reps;
    for (const auto& ev : impacts) reps.push_back(static_cast<long>(cfg.rep_of(ev.time)));
    std::sort(reps.begin(), reps.end());
    std::vector<long> dev;
    for (const auto& d : detections) {
        const long t = static_cast<long>(d.t_trigger);
        auto it = std::lower_bound(reps.begin(), reps.end(), t);
        std::optional<long> best;
        if (it != reps.end()) best = t - *it;
        if (it != reps.begin() && (!best || std::abs(t - *(it - 1)) < std::abs(*best)))
            best = t - *(it - 1);
        if (best && std::abs(*best) <= max_offset) dev.push_back(*best);
    }
    return dev;
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw Error(Errc::insufficient_data, "median of an empty sample");
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m), v.end());
    double med = v[m];
    if (v.size() % 2 == 0)
        med = 0.5 * (med + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m)));
    return med;
}

struct TimingSummary {
    std::size_t n_matched = 0;
    std::size_t n_detections = 0;
    double median = 0.0;  // repetitions
    double mad = 0.0;     // repetitions, about the median
};

inline TimingSummary summarize_timing(const std::vector<long>& dev, std::size_t n_detections) {
    TimingSummary s;
    s.n_detections = n_detections;
    s.n_matched = dev.size();
    if (dev.empty()) throw Error(Errc::insufficient_data, "no detections matched to impacts");
    std::vector<double> v(dev.begin(), dev.end());
    s.median = median_of(v);
    for (auto& x : v) x = std::abs(x - s.median);
    s.mad = median_of(std::move(v));
    return s;
}

// ---------------------------------------------------------------------------
// Replication study

struct ReplicationOptions {
    io::Settings settings;
    std::size_t n_runs = 250;
    std::uint64_t base_seed = 0;
    std::size_t workers = 1;
    std::vector<double> thresholds{8.0, 12.0, 14.0, 16.0};
    long dip_window = 100;          // repetitions either side of the trigger
    double dip_smoothing = 10.0;    // points
    double delay_bin_width = 2.0;   // s
    double distance_bin_mm = 1.0;
    bool keep_runs = false;         // retain full records (memory heavy)
};

struct ThresholdResult {
    double threshold = 0.0;
    std::size_t n_detections = 0;
    std::size_t n_multi_qubit = 0;
    std::vector<std::vector<double>> trigger_times;   // per run, seconds, sorted
    std::vector<RunDetections> runs;
};

struct ReplicationResult {
    ReplicationOptions options;
    std::vector<ThresholdResult> per_threshold;
    std::size_t main_index = 0;          // entry whose threshold equals the detector threshold
    std::size_t n_impacts = 0;
    std::vector<long> timing_dev;        // main threshold
    std::optional<TimingSummary> timing;
    stats::DipAccumulator dip{1};
    std::vector<RunRecord> records;      // only with keep_runs

    const ThresholdResult& main() const { return per_threshold[main_index]; }
};

/// Simulates `n_runs` runs with seeds base_seed, base_seed + 1, ... and runs
/// detection at every threshold. The dip profile aggregates members of
/// multi-qubit jumps at the main threshold.
inline ReplicationResult run_replication(const ReplicationOptions& opt, const ChipLayout& layout,
                                         const std::string& layout_path = {}) {
    const DetectorParams& det = opt.settings.detector;
    det.validate();
    ReplicationResult res;
    res.options = opt;
    res.dip = stats::DipAccumulator(opt.dip_window);
    auto it = std::find(opt.thresholds.begin(), opt.thresholds.end(), det.threshold);
    std::vector<double> thresholds = opt.thresholds;
    if (it == opt.thresholds.end()) thresholds.push_back(det.threshold);
    res.main_index = static_cast<std::size_t>(
        std::find(thresholds.begin(), thresholds.end(), det.threshold) - thresholds.begin());
    const long max_offset = static_cast<long>(resolve(det, opt.settings.sim.rep_period).half_width);

    struct Outcome {
        std::vector<RunDetections> per_threshold;
        stats::DipAccumulator dip;
        std::vector<long> dev;
        std::size_t n_impacts;
        std::optional<RunRecord> record;
    };
    auto one = [&](std::size_t i) {
        SimConfig cfg = opt.settings.sim;
        cfg.seed = opt.base_seed + i;
        RunRecord rec = simulate_run(cfg, layout, layout_path);
        Outcome o{detect_run_thresholds(rec, det, thresholds), stats::DipAccumulator(opt.dip_window),
                  {}, rec.ground_truth->size(), std::nullopt};
        const auto& main = o.per_threshold[res.main_index];
        for (const auto& c : main.clusters.clusters)
            if (c.multi_qubit())
                for (const auto& d : c.members) o.dip.add(rec.m0[rec.index_of(d.qubit_id)], d.t_trigger);
        o.dev = timing_deviations(main.detections, *rec.ground_truth, cfg, max_offset);
        if (opt.keep_runs) o.record = std::move(rec);
        return o;
    };
    auto outcomes = parallel_map(opt.n_runs, opt.workers, one);

    res.per_threshold.resize(thresholds.size());
    for (std::size_t k = 0; k < thresholds.size(); ++k) res.per_threshold[k].threshold = thresholds[k];
    for (auto& o : outcomes) {
        res.n_impacts += o.n_impacts;
        res.dip.merge(o.dip);
        res.timing_dev.insert(res.timing_dev.end(), o.dev.begin(), o.dev.end());
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
            auto& tr = res.per_threshold[k];
            auto& rd = o.per_threshold[k];
            tr.n_detections += rd.detections.size();
            std::vector<double> times;
            for (const auto& d : rd.detections)
                times.push_back(static_cast<double>(d.t_trigger) * opt.settings.sim.rep_period);
            tr.trigger_times.push_back(std::move(times));
            for (const auto& c : rd.clusters.clusters) tr.n_multi_qubit += c.multi_qubit() ? 1 : 0;
            tr.runs.push_back(std::move(rd));
        }
        if (o.record) res.records.push_back(std::move(*o.record));
    }
    if (!res.timing_dev.empty()) res.timing = summarize_timing(res.timing_dev, res.main().n_detections);
    return res;
}

inline std::vector<JumpCluster> multi_qubit_jumps(const ThresholdResult& tr) {
    std::vector<JumpCluster> out;
    for (const auto& rd : tr.runs)
        for (const auto& c : rd.clusters.clusters)
            if (c.multi_qubit()) out.push_back(c);
    return out;
}

inline std::vector<QubitId> analysed_qubits(const ChipLayout& layout, const DetectorParams& det) {
    std::vector<QubitId> ids;
    for (QubitId id : layout.active_ids())
        if (!det.excluded(id)) ids.push_back(id);
    return ids;
}

inline stats::DelayFit fit_delays(const ThresholdResult& tr, double run_duration,
                                  double bin_width, stats::DelayHistogram* hist = nullptr) {
    const auto h = stats::delay_histogram(tr.trigger_times, bin_width);
    if (hist) *hist = h;
    return stats::fit_modified_poisson(h, run_duration);
}

inline stats::DistanceReport distance_analysis(const ThresholdResult& tr, const ChipLayout& layout,
                                               const DetectorParams& det, double run_duration,
                                               double bin_mm) {
    const double hours = static_cast<double>(tr.runs.size()) * run_duration / 3600.0;
    return stats::coincidence_vs_distance(multi_qubit_jumps(tr), layout, analysed_qubits(layout, det),
                                          hours, bin_mm);
}

// ---------------------------------------------------------------------------
// Interleaved TLS analysis

struct TlsAnalysis {
    std::vector<JumpDetection> detections;  // averaged mode, iteration units
    ClusteredJumps clusters;
    stats::ScrambleReport scramble;
};

inline TlsAnalysis analyze_tls(const SpectrumSeries& s, DetectorParams det,
                               std::size_t window = 200, double r_threshold = 0.4,
                               std::optional<std::size_t> tolerance = std::nullopt) {
    det.averaged_mode = true;
    const SampleParams sp = resolve(det, s.tls.iteration_period);
    TlsAnalysis a;
    for (std::size_t q = 0; q < s.detector_qubits.size(); ++q) {
        const QubitId id = s.detector_qubits[q];
        if (det.excluded(id)) continue;
        auto d = detect_trace(std::span<const double>(s.detector_probs[q]), sp, id);
        a.detections.insert(a.detections.end(), d.begin(), d.end());
    }
    a.clusters = cluster_jumps(a.detections, sp);
    auto r = stats::pearson_window_r(s.frames, s.n_steps(), window);
    const std::size_t det_len = s.detector_probs.empty() ? r.size() : s.detector_probs.front().size();
    a.scramble = stats::classify_scrambling(std::move(r), a.clusters.multi_qubit(), det_len,
                                            r_threshold, tolerance.value_or(window));
    return a;
}

} // namespace qimpact
