// Interleaved Stark-swept TLS spectroscopy with an averaged jump detector.
//
// Every iteration sweeps the qubit frequency through `n_steps` Stark shifts and
// records one T1-survival shot per step (MS), then runs the Ramsey detector
// `detector_shots` times per active qubit and keeps the averaged outcome P(MR=1).
// Impacts close to the monitored qubit resample a fraction of its TLS
// frequencies ("scrambling"); every impact also shifts the offset charge of the
// detector qubits.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qimpact/bits.hpp"
#include "qimpact/chip.hpp"
#include "qimpact/error.hpp"
#include "qimpact/rng.hpp"
#include "qimpact/simulator.hpp"

namespace qimpact {

struct TlsLine {
    double freq_offset = 0.0;  // Hz, in qubit-shift coordinates
    double linewidth = 1e6;    // Hz, full width at half maximum
    double depth = 0.5;        // fractional survival loss at resonance

    friend bool operator==(const TlsLine&, const TlsLine&) = default;
};

struct TlsWalk {
    std::size_t index = 0;     // which TLS diffuses
    double step = 0.0;         // Hz per iteration (standard deviation)

    friend bool operator==(const TlsWalk&, const TlsWalk&) = default;
};

inline std::vector<TlsLine> default_tls_lines() {
    return {{-14e6, 2.0e6, 0.8}, {-8e6, 1.5e6, 0.7}, {-2.5e6, 0.8e6, 0.6},
            {4e6, 1.2e6, 0.7},   {10e6, 2.0e6, 0.8}, {16e6, 2.0e6, 0.7}};
}

struct TlsConfig {
    std::size_t n_steps = 251;
    double shift_range = 20e6;       // Hz, sweep spans [-range, +range]
    double stark_detuning = 50e6;    // Hz, magnitude; sign chosen per half sweep
    double anharmonicity = -300e6;   // Hz
    std::vector<TlsLine> tls_list = default_tls_lines();
    std::size_t n_iterations = 10'000;
    double iteration_period = 0.024; // s
    double probe_duration = 50e-6;   // s
    std::size_t detector_shots = 251;
    double scramble_fraction = 1.0;
    double scramble_radius_mm = 2.0;
    std::optional<QubitId> monitored_qubit;  // default: active qubit nearest the chip center
    std::optional<TlsWalk> diffusing_tls;

    double duration() const { return static_cast<double>(n_iterations) * iteration_period; }

    void validate() const {
        if (n_steps < 2) throw Error(Errc::invalid_argument, "n_steps must be at least 2");
        if (n_iterations == 0) throw Error(Errc::invalid_argument, "n_iterations must be positive");
        if (detector_shots == 0)
            throw Error(Errc::invalid_argument, "detector_shots must be positive");
        if (!(shift_range > 0.0) || !(stark_detuning > 0.0) || !(iteration_period > 0.0) ||
            !(probe_duration > 0.0))
            throw Error(Errc::invalid_argument, "TLS durations and ranges must be positive");
        if (anharmonicity == 0.0) throw Error(Errc::invalid_argument, "anharmonicity must be nonzero");
        if (!(scramble_fraction >= 0.0 && scramble_fraction <= 1.0))
            throw Error(Errc::invalid_argument, "scramble_fraction must lie in [0, 1]");
        if (!(scramble_radius_mm >= 0.0))
            throw Error(Errc::invalid_argument, "scramble_radius_mm must be non-negative");
        for (const auto& t : tls_list) {
            if (!(t.depth >= 0.0 && t.depth <= 1.0))
                throw Error(Errc::invalid_argument, "TLS depth must lie in [0, 1]");
            if (!(t.linewidth > 0.0))
                throw Error(Errc::invalid_argument, "TLS linewidth must be positive");
        }
        if (diffusing_tls && diffusing_tls->index >= tls_list.size())
            throw Error(Errc::invalid_argument, "diffusing_tls index out of range");
    }

    friend bool operator==(const TlsConfig&, const TlsConfig&) = default;
};

/// Qubit frequency shift produced by a Stark tone of amplitude `omega_s`
/// detuned by `delta_s` from the qubit, for anharmonicity `alpha` (all Hz).
inline double stark_shift(double omega_s, double delta_s, double alpha) {
    if (delta_s == 0.0 || alpha + delta_s == 0.0)
        throw Error(Errc::singular, "Stark shift is singular at this detuning");
    return alpha * omega_s * omega_s / (2.0 * delta_s * (alpha + delta_s));
}

/// Qubit shifts visited by the sweep. The drive amplitude is ramped linearly;
/// the lower half of the sweep uses one detuning sign and the upper half the
/// other, so shifts are quadratically spaced on both sides of zero.
inline std::vector<double> stark_sweep(const TlsConfig& cfg) {
    std::vector<double> shifts(cfg.n_steps);
    const double n = static_cast<double>(cfg.n_steps - 1);
    for (std::size_t i = 0; i < cfg.n_steps; ++i) {
        const double a = -1.0 + 2.0 * static_cast<double>(i) / n;
        const double want = a < 0.0 ? -1.0 : 1.0;
        // pick the detuning sign whose shift has the wanted sign
        double delta = cfg.stark_detuning;
        if (stark_shift(1.0, delta, cfg.anharmonicity) * want < 0.0) delta = -delta;
        const double unit = std::abs(stark_shift(1.0, delta, cfg.anharmonicity));
        const double omega_max = std::sqrt(cfg.shift_range / unit);
        shifts[i] = stark_shift(std::abs(a) * omega_max, delta, cfg.anharmonicity);
    }
    return shifts;
}

/// T1 survival after the probe at qubit shift `f`, with Lorentzian excess loss
/// from each TLS line, before readout error.
inline double tls_survival(double f, const std::vector<TlsLine>& lines, double baseline_t1,
                           double probe) {
    double rate = 1.0 / baseline_t1;
    for (const auto& t : lines) {
        const double depth = std::min(t.depth, 1.0 - 1e-12);
        const double peak = -std::log1p(-depth) / probe;
        const double x = (f - t.freq_offset) / (0.5 * t.linewidth);
        rate += peak / (1.0 + x * x);
    }
    return std::exp(-probe * rate);
}

struct SpectrumSeries {
    RecordMode mode = RecordMode::tls_interleaved;
    TlsConfig tls;
    SimConfig sim;
    std::string layout_path;
    std::uint64_t seed = 0;
    QubitId monitored_qubit = 0;
    std::vector<double> shifts;   // Hz, one per step
    BitVector frames;             // MS shots, iteration-major
    std::vector<QubitId> detector_qubits;
    std::vector<std::vector<double>> detector_probs;  // per detector qubit, per iteration
    std::optional<std::vector<ImpactEvent>> impacts;
    std::optional<std::vector<std::size_t>> scramble_iterations;

    std::size_t n_iterations() const { return tls.n_iterations; }
    std::size_t n_steps() const { return tls.n_steps; }
    bool ms(std::size_t iteration, std::size_t step) const {
        return frames[iteration * tls.n_steps + step];
    }
    const std::vector<double>& detector(QubitId id) const {
        auto it = std::find(detector_qubits.begin(), detector_qubits.end(), id);
        if (it == detector_qubits.end())
            throw Error(Errc::invalid_argument, "no detector trace for qubit " + std::to_string(id));
        return detector_probs[static_cast<std::size_t>(it - detector_qubits.begin())];
    }

    friend bool operator==(const SpectrumSeries&, const SpectrumSeries&) = default;
};

/// Active qubit closest to the center of the layout's bounding box.
inline QubitId central_active_qubit(const ChipLayout& layout) {
    const auto ids = layout.active_ids();
    if (ids.empty()) throw Error(Errc::invalid_argument, "layout has no active qubits");
    const BoundingBox b = layout.bounding_box();
    const Position c{(b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0};
    return *std::min_element(ids.begin(), ids.end(), [&](QubitId a, QubitId q) {
        return distance(layout.position(a), c) < distance(layout.position(q), c);
    });
}

/// Simulation config whose run covers the interleaved experiment, for drawing
/// impacts with `generate_impacts`.
inline SimConfig tls_impact_config(SimConfig sim, const TlsConfig& tls) {
    sim.run_duration = tls.duration();
    sim.n_reps = static_cast<std::size_t>(std::llround(sim.run_duration / sim.rep_period));
    if (sim.n_reps == 0) sim.n_reps = 1;
    sim.run_duration = static_cast<double>(sim.n_reps) * sim.rep_period;
    return sim;
}

/// First iteration affected by an impact at time t.
inline std::size_t effect_iteration(double t, const TlsConfig& cfg) {
    return static_cast<std::size_t>(std::ceil(t / cfg.iteration_period));
}

inline SpectrumSeries simulate_tls_series(const TlsConfig& tls, const SimConfig& sim,
                                          const ChipLayout& layout,
                                          const std::vector<ImpactEvent>& impacts,
                                          std::string layout_path = {}) {
    tls.validate();
    sim.validate();
    SpectrumSeries out;
    out.tls = tls;
    out.sim = sim;
    out.layout_path = std::move(layout_path);
    out.seed = sim.seed;
    out.monitored_qubit = tls.monitored_qubit ? *tls.monitored_qubit : central_active_qubit(layout);
    out.tls.monitored_qubit = out.monitored_qubit;
    if (!layout.contains(out.monitored_qubit))
        throw Error(Errc::invalid_argument, "monitored qubit not in layout");
    out.shifts = stark_sweep(tls);
    out.detector_qubits = layout.active_ids();
    out.impacts = impacts;
    out.scramble_iterations.emplace();

    const std::size_t n_q = out.detector_qubits.size();
    const double sigma_iter =
        std::sqrt(sim.diffusion_var_per_hour / 3600.0 * tls.iteration_period);
    const Position monitored_pos = layout.position(out.monitored_qubit);

    Rng spectra_rng = make_stream(sim.seed, out.monitored_qubit, StreamPurpose::tls_spectra);
    Rng scramble_rng = make_stream(sim.seed, kGlobalStream, StreamPurpose::tls_scramble);
    Rng walk_rng = make_stream(sim.seed, kGlobalStream, StreamPurpose::tls_walk);
    std::vector<Rng> det_rng, diff_rng, sign_rng;
    std::vector<double> charge(n_q);
    for (std::size_t q = 0; q < n_q; ++q) {
        const QubitId id = out.detector_qubits[q];
        Rng init = make_stream(sim.seed, id, StreamPurpose::initial_charge);
        charge[q] = uniform01(init);
        det_rng.push_back(make_stream(sim.seed, id, StreamPurpose::tls_detector));
        diff_rng.push_back(make_stream(sim.seed, id, StreamPurpose::diffusion));
        sign_rng.push_back(make_stream(sim.seed, id, StreamPurpose::jump_sign));
    }

    std::vector<TlsLine> lines = tls.tls_list;
    std::vector<std::size_t> order(lines.size());
    const auto n_scramble = static_cast<std::size_t>(
        std::llround(tls.scramble_fraction * static_cast<double>(lines.size())));

    std::vector<std::uint64_t> words((tls.n_iterations * tls.n_steps + 63) / 64, 0);
    out.detector_probs.assign(n_q, std::vector<double>(tls.n_iterations));
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    std::size_t next_impact = 0;

    for (std::size_t it = 0; it < tls.n_iterations; ++it) {
        bool scrambled = false;
        while (next_impact < impacts.size() &&
               effect_iteration(impacts[next_impact].time, tls) <= it) {
            const auto& ev = impacts[next_impact++];
            for (std::size_t q = 0; q < n_q; ++q) {
                const double dn =
                    charge_response(ev, layout.position(out.detector_qubits[q]), sim.sigma_spatial);
                charge[q] += (sign_rng[q]() >> 63) ? dn : -dn;
            }
            if (distance(ev.pos, monitored_pos) <= tls.scramble_radius_mm && n_scramble > 0) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::shuffle(order.begin(), order.end(), scramble_rng);
                for (std::size_t k = 0; k < n_scramble; ++k)
                    lines[order[k]].freq_offset =
                        -tls.shift_range + 2.0 * tls.shift_range * uniform01(scramble_rng);
                scrambled = true;
            }
        }
        if (scrambled) out.scramble_iterations->push_back(it);
        if (tls.diffusing_tls)
            lines[tls.diffusing_tls->index].freq_offset +=
                tls.diffusing_tls->step * unit_normal(walk_rng);

        for (std::size_t s = 0; s < tls.n_steps; ++s) {
            const double p = with_meas_error(
                tls_survival(out.shifts[s], lines, sim.baseline_t1, tls.probe_duration),
                sim.meas_error);
            const std::size_t bit = it * tls.n_steps + s;
            if ((spectra_rng() >> 32) < bernoulli_threshold32(p))
                words[bit >> 6] |= std::uint64_t{1} << (bit & 63);
        }
        for (std::size_t q = 0; q < n_q; ++q) {
            const double p = with_meas_error(ramsey_prob(wrap_charge(charge[q]), sim), sim.meas_error);
            std::binomial_distribution<std::size_t> shots(tls.detector_shots, p);
            out.detector_probs[q][it] =
                static_cast<double>(shots(det_rng[q])) / static_cast<double>(tls.detector_shots);
            if (sigma_iter > 0.0) charge[q] += sigma_iter * unit_normal(diff_rng[q]);
        }
    }
    out.frames = BitVector::from_words(std::move(words), tls.n_iterations * tls.n_steps);
    return out;
}

/// Draws impacts over the interleaved experiment and simulates it.
inline SpectrumSeries simulate_tls_series(const TlsConfig& tls, const SimConfig& sim,
                                          const ChipLayout& layout, std::string layout_path = {}) {
    tls.validate();
    const SimConfig impact_cfg = tls_impact_config(sim, tls);
    return simulate_tls_series(tls, impact_cfg, layout, generate_impacts(impact_cfg, layout),
                               std::move(layout_path));
}

} // namespace qimpact
