// Seeded Monte-Carlo generator of Ramsey jump-detector runs.
//
// Each repetition of the detector sequence yields two single-shot outcomes per
// qubit: M0, a fixed-delay T1 survival measurement, and M1, a fixed-delay ef
// Ramsey measurement whose outcome probability depends on the offset charge.
// Radiation impacts arrive as a Poisson process; each one shifts the offset
// charge of every qubit by a Gaussian-falloff amount with a random sign and
// suppresses T1 for the single repetition that contains it.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qimpact/bits.hpp"
#include "qimpact/chip.hpp"
#include "qimpact/error.hpp"
#include "qimpact/rng.hpp"

namespace qimpact {

struct SimConfig {
    double run_duration = 44.0;                 // s
    std::size_t n_reps = 1'000'000;
    double rep_period = 44e-6;                  // s
    double t_ramsey = 2e-6;                     // s
    double t1_delay = 40e-6;                    // s
    double eps_ef_over_2pi = 800e3;             // Hz
    double t2_ef = 50e-6;                       // s; +inf disables dephasing
    double meas_error = 0.015;
    double impact_rate = 0.1;                   // Hz
    double sigma_spatial = 1.5;                 // mm
    double peak_dng = 0.1;
    double diffusion_var_per_hour = 0.1;        // (offset charge)^2 / hour
    double baseline_t1 = 100e-6;                // s
    double dip_t1 = 1e-6;                       // s, at the epicenter
    bool t1_dip_enabled = true;
    std::size_t diffusion_block = 256;          // repetitions per diffusion step
    std::uint64_t seed = 0;

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v))
                throw Error(Errc::invalid_argument, std::string(name) + " must be positive");
        };
        auto non_negative = [](double v, const char* name) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw Error(Errc::invalid_argument, std::string(name) + " must be non-negative");
        };
        positive(run_duration, "run_duration");
        positive(rep_period, "rep_period");
        positive(t_ramsey, "t_ramsey");
        positive(t1_delay, "t1_delay");
        non_negative(eps_ef_over_2pi, "eps_ef_over_2pi");
        if (!(t2_ef > 0.0)) throw Error(Errc::invalid_argument, "t2_ef must be positive");
        if (!(meas_error >= 0.0 && meas_error <= 0.5))
            throw Error(Errc::invalid_argument, "meas_error must lie in [0, 0.5]");
        non_negative(impact_rate, "impact_rate");
        positive(sigma_spatial, "sigma_spatial");
        non_negative(peak_dng, "peak_dng");
        non_negative(diffusion_var_per_hour, "diffusion_var_per_hour");
        positive(baseline_t1, "baseline_t1");
        positive(dip_t1, "dip_t1");
        if (n_reps == 0) throw Error(Errc::invalid_argument, "n_reps must be positive");
        if (diffusion_block == 0)
            throw Error(Errc::invalid_argument, "diffusion_block must be positive");
        if (std::abs(run_duration - static_cast<double>(n_reps) * rep_period) > rep_period)
            throw Error(Errc::invalid_argument,
                        "run_duration must equal n_reps * rep_period to within one repetition");
    }

    /// Repetition index containing time t (seconds).
    std::size_t rep_of(double t) const {
        const auto r = static_cast<std::size_t>(std::floor(t / rep_period));
        return std::min(r, n_reps - 1);
    }

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

enum class RecordMode { jump_detector, tls_interleaved, external };

inline const char* to_string(RecordMode m) {
    switch (m) {
        case RecordMode::jump_detector: return "jump_detector";
        case RecordMode::tls_interleaved: return "tls_interleaved";
        case RecordMode::external: return "external";
    }
    return "external";
}

/// Shot record of one detector run. `ground_truth` is absent for ingested
/// laboratory data.
struct RunRecord {
    RecordMode mode = RecordMode::jump_detector;
    SimConfig config;
    std::string layout_path;
    std::uint64_t seed = 0;
    std::optional<std::vector<ImpactEvent>> ground_truth;
    std::vector<QubitId> qubit_ids;
    std::vector<BitVector> m0;
    std::vector<BitVector> m1;

    std::size_t n_reps() const { return m0.empty() ? 0 : m0.front().size(); }

    std::size_t index_of(QubitId id) const {
        auto it = std::find(qubit_ids.begin(), qubit_ids.end(), id);
        if (it == qubit_ids.end())
            throw Error(Errc::invalid_argument, "qubit " + std::to_string(id) + " not in record");
        return static_cast<std::size_t>(it - qubit_ids.begin());
    }

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

// ---------------------------------------------------------------------------
// Outcome probabilities

/// Probability of reading the state actually prepared, folded with a symmetric
/// readout flip probability.
inline double with_meas_error(double p, double err) { return (1.0 - err) * p + err * (1.0 - p); }

/// P(M1 = 1) of the fixed-delay ef Ramsey sequence, before readout error.
inline double ramsey_prob(OffsetCharge ng, const SimConfig& cfg) {
    const double eps_ef = 2.0 * std::numbers::pi * cfg.eps_ef_over_2pi;
    const double contrast = std::exp(-cfg.t_ramsey / cfg.t2_ef);
    const double phase = eps_ef * std::cos(2.0 * std::numbers::pi * ng.value()) * cfg.t_ramsey / 2.0;
    return 0.5 * (1.0 + contrast * std::cos(phase));
}

/// P(M0 = 1) after the fixed T1 delay, before readout error.
inline double t1_prob(double t1_current, const SimConfig& cfg) {
    if (!(t1_current > 0.0)) throw Error(Errc::invalid_argument, "T1 must be positive");
    return std::exp(-cfg.t1_delay / t1_current);
}

/// Transient T1 at a qubit: the excess loss rate 1/T1_dip - 1/T1_base falls off
/// with the same Gaussian profile as the charge response.
inline double transient_t1(const ImpactEvent& ev, Position qubit_pos, const SimConfig& cfg) {
    const double excess = 1.0 / ev.t1_epicenter - 1.0 / cfg.baseline_t1;
    const double d = distance(ev.pos, qubit_pos);
    const double falloff = std::exp(-d * d / (2.0 * cfg.sigma_spatial * cfg.sigma_spatial));
    return 1.0 / (1.0 / cfg.baseline_t1 + excess * falloff);
}

// ---------------------------------------------------------------------------
// Impacts

inline std::vector<ImpactEvent> generate_impacts(const SimConfig& cfg, const ChipLayout& layout) {
    cfg.validate();
    std::vector<ImpactEvent> events;
    if (cfg.impact_rate == 0.0 || layout.size() == 0) return events;
    Rng rng = make_stream(cfg.seed, kGlobalStream, StreamPurpose::impacts);
    std::poisson_distribution<std::size_t> count(cfg.impact_rate * cfg.run_duration);
    const std::size_t n = count(rng);
    const BoundingBox box = layout.bounding_box();
    events.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ImpactEvent ev;
        ev.time = uniform01(rng) * cfg.run_duration;
        ev.pos.x_mm = box.x_min + uniform01(rng) * (box.x_max - box.x_min);
        ev.pos.y_mm = box.y_min + uniform01(rng) * (box.y_max - box.y_min);
        ev.peak_charge = cfg.peak_dng;
        ev.t1_epicenter = cfg.dip_t1;
        events.push_back(ev);
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const ImpactEvent& a, const ImpactEvent& b) { return a.time < b.time; });
    return events;
}

// ---------------------------------------------------------------------------
// Offset-charge trajectories

/// Piecewise-constant offset-charge trajectory over repetitions. Values are
/// kept unwrapped so diffusion statistics remain observable; `at()` wraps.
class ChargeTrace {
public:
    struct Segment {
        std::size_t start_rep;
        double unwrapped;
    };

    ChargeTrace() = default;
    ChargeTrace(std::size_t n_reps, std::vector<Segment> segments)
        : n_reps_(n_reps), segments_(std::move(segments)) {}

    std::size_t n_reps() const { return n_reps_; }
    const std::vector<Segment>& segments() const { return segments_; }

    double unwrapped_at(std::size_t rep) const {
        auto it = std::upper_bound(segments_.begin(), segments_.end(), rep,
                                   [](std::size_t r, const Segment& s) { return r < s.start_rep; });
        return std::prev(it)->unwrapped;
    }
    OffsetCharge at(std::size_t rep) const { return wrap_charge(unwrapped_at(rep)); }

    /// End of the segment starting at index i (exclusive).
    std::size_t segment_end(std::size_t i) const {
        return i + 1 < segments_.size() ? segments_[i + 1].start_rep : n_reps_;
    }

private:
    std::size_t n_reps_ = 0;
    std::vector<Segment> segments_;
};

struct ChargeJump {
    std::size_t rep;  // first repetition carrying the new value
    double delta;     // signed change
};

/// Builds a trajectory from an initial value, Gaussian diffusion applied every
/// `block` repetitions, and discrete jumps (sorted by rep).
inline ChargeTrace build_charge_trace(double initial, std::size_t n_reps, std::size_t block,
                                      double diffusion_sigma_per_block,
                                      const std::vector<ChargeJump>& jumps, Rng& rng) {
    std::vector<ChargeTrace::Segment> segs;
    segs.push_back({0, initial});
    std::normal_distribution<double> step(0.0, 1.0);
    double value = initial;
    std::size_t next_jump = 0;
    const bool diffuse = diffusion_sigma_per_block > 0.0;
    std::size_t next_block = diffuse ? block : n_reps;
    while (true) {
        const std::size_t jump_rep = next_jump < jumps.size() ? jumps[next_jump].rep : n_reps;
        const std::size_t r = std::min(jump_rep, next_block);
        if (r >= n_reps) break;
        if (r == next_block) {
            value += diffusion_sigma_per_block * step(rng);
            next_block += block;
        }
        while (next_jump < jumps.size() && jumps[next_jump].rep == r) {
            value += jumps[next_jump].delta;
            ++next_jump;
        }
        if (segs.back().start_rep == r)
            segs.back().unwrapped = value;
        else
            segs.push_back({r, value});
    }
    return ChargeTrace(n_reps, std::move(segs));
}

/// Offset-charge trajectory of every active qubit, in layout order.
inline std::vector<ChargeTrace> simulate_charge_traces(const SimConfig& cfg,
                                                       const ChipLayout& layout,
                                                       const std::vector<ImpactEvent>& impacts) {
    cfg.validate();
    if (!std::is_sorted(impacts.begin(), impacts.end(),
                        [](const ImpactEvent& a, const ImpactEvent& b) { return a.time < b.time; }))
        throw Error(Errc::invalid_argument, "impacts must be sorted by time");
    const double block_seconds = static_cast<double>(cfg.diffusion_block) * cfg.rep_period;
    const double sigma_block = std::sqrt(cfg.diffusion_var_per_hour / 3600.0 * block_seconds);
    std::vector<ChargeTrace> traces;
    for (QubitId id : layout.active_ids()) {
        Rng init = make_stream(cfg.seed, id, StreamPurpose::initial_charge);
        Rng diffusion = make_stream(cfg.seed, id, StreamPurpose::diffusion);
        Rng sign = make_stream(cfg.seed, id, StreamPurpose::jump_sign);
        const Position pos = layout.position(id);
        std::vector<ChargeJump> jumps;
        jumps.reserve(impacts.size());
        for (const auto& ev : impacts) {
            const double dn = charge_response(ev, pos, cfg.sigma_spatial);
            const bool positive = (sign() >> 63) != 0;
            jumps.push_back({cfg.rep_of(ev.time), positive ? dn : -dn});
        }
        traces.push_back(build_charge_trace(uniform01(init), cfg.n_reps, cfg.diffusion_block,
                                            sigma_block, jumps, diffusion));
    }
    return traces;
}

// ---------------------------------------------------------------------------
// Full run

namespace detail {

struct M0Override {
    std::size_t rep;
    std::uint64_t threshold;
};

/// Samples M0/M1 for one qubit. One 64-bit draw per repetition feeds both
/// shots: the low word for M0, the high word for M1.
inline void sample_shots(const SimConfig& cfg, const ChargeTrace& trace,
                         const std::vector<M0Override>& overrides, Rng& rng, BitVector& m0,
                         BitVector& m1) {
    const std::size_t n = cfg.n_reps;
    std::vector<std::uint64_t> w0((n + 63) / 64, 0), w1((n + 63) / 64, 0);
    const std::uint64_t thr0_base =
        bernoulli_threshold32(with_meas_error(t1_prob(cfg.baseline_t1, cfg), cfg.meas_error));
    std::size_t next_ov = 0;
    const auto& segs = trace.segments();
    for (std::size_t s = 0; s < segs.size(); ++s) {
        const double p1 = with_meas_error(ramsey_prob(wrap_charge(segs[s].unwrapped), cfg),
                                          cfg.meas_error);
        const std::uint64_t thr1 = bernoulli_threshold32(p1);
        const std::size_t end = trace.segment_end(s);
        for (std::size_t r = segs[s].start_rep; r < end; ++r) {
            const std::uint64_t u = rng();
            std::uint64_t thr0 = thr0_base;
            while (next_ov < overrides.size() && overrides[next_ov].rep < r) ++next_ov;
            if (next_ov < overrides.size() && overrides[next_ov].rep == r)
                thr0 = overrides[next_ov].threshold;
            const std::uint64_t b0 = (u & 0xffffffffu) < thr0;
            const std::uint64_t b1 = (u >> 32) < thr1;
            w0[r >> 6] |= b0 << (r & 63);
            w1[r >> 6] |= b1 << (r & 63);
        }
    }
    m0 = BitVector::from_words(std::move(w0), n);
    m1 = BitVector::from_words(std::move(w1), n);
}

} // namespace detail

/// Simulates a run with impacts drawn from the configured Poisson process.
inline RunRecord simulate_run(const SimConfig& cfg, const ChipLayout& layout,
                              const std::vector<ImpactEvent>& impacts,
                              std::string layout_path = {}) {
    cfg.validate();
    RunRecord rec;
    rec.mode = RecordMode::jump_detector;
    rec.config = cfg;
    rec.seed = cfg.seed;
    rec.layout_path = std::move(layout_path);
    rec.ground_truth = impacts;
    rec.qubit_ids = layout.active_ids();

    const auto traces = simulate_charge_traces(cfg, layout, impacts);
    rec.m0.resize(rec.qubit_ids.size());
    rec.m1.resize(rec.qubit_ids.size());
    for (std::size_t qi = 0; qi < rec.qubit_ids.size(); ++qi) {
        const QubitId id = rec.qubit_ids[qi];
        const Position pos = layout.position(id);
        std::vector<detail::M0Override> overrides;
        if (cfg.t1_dip_enabled) {
            // Impacts sharing a repetition add their loss rates.
            std::vector<std::pair<std::size_t, double>> rates;
            for (const auto& ev : impacts) {
                const double excess = 1.0 / transient_t1(ev, pos, cfg) - 1.0 / cfg.baseline_t1;
                const std::size_t r = cfg.rep_of(ev.time);
                if (!rates.empty() && rates.back().first == r)
                    rates.back().second += excess;
                else
                    rates.emplace_back(r, excess);
            }
            for (const auto& [r, excess] : rates) {
                const double t1 = 1.0 / (1.0 / cfg.baseline_t1 + excess);
                overrides.push_back(
                    {r, bernoulli_threshold32(with_meas_error(t1_prob(t1, cfg), cfg.meas_error))});
            }
        }
        Rng shots = make_stream(cfg.seed, id, StreamPurpose::shots);
        detail::sample_shots(cfg, traces[qi], overrides, shots, rec.m0[qi], rec.m1[qi]);
    }
    return rec;
}

inline RunRecord simulate_run(const SimConfig& cfg, const ChipLayout& layout,
                              std::string layout_path = {}) {
    return simulate_run(cfg, layout, generate_impacts(cfg, layout), std::move(layout_path));
}

} // namespace qimpact
