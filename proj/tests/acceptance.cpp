// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "qimpact/io/detections_io.hpp"
#include "qimpact/io/json_codec.hpp"
#include "qimpact/io/run_io.hpp"
#include "qimpact/io/spectrum_io.hpp"
#include "qimpact/pipeline.hpp"
#include "qimpact/stats/rate.hpp"

using namespace qimpact;
namespace fs = std::filesystem;

namespace {

std::map<int, std::string> results;
int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    results[id] = std::string(ok ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + ": " + what +
                  " [" + detail + "]";
    std::fprintf(stderr, "criterion %d done\n", id);
    if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Short, impact-rich runs for tests that need many independent datasets.
SimConfig short_run(double seconds, double rate) {
    SimConfig c;
    c.n_reps = static_cast<std::size_t>(std::llround(seconds / c.rep_period));
    c.run_duration = static_cast<double>(c.n_reps) * c.rep_period;
    c.impact_rate = rate;
    return c;
}

std::vector<double> sample_model(double tau, double p, double T, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::exponential_distribution<double> ex(1.0 / tau);
    std::vector<double> out;
    while (out.size() < n) {
        if (u(rng) < p) {
            out.push_back(0.0);
            continue;
        }
        double d;
        do d = ex(rng);
        while (!(d < T && u(rng) < 1.0 - d / T));
        out.push_back(d);
    }
    return out;
}

// ---------------------------------------------------------------------------

void timing_dip_sweep(const ChipLayout& layout, ReplicationResult& reference) {
    ReplicationOptions opt;
    opt.n_runs = 250;
    opt.workers = workers();
    reference = run_replication(opt, layout);
    const auto& r = reference;

    const bool mad_ok = r.timing && r.timing->mad <= 5.0;
    report(1, mad_ok, "timing MAD <= 5 repetitions over 250 runs at threshold 14",
           r.timing ? fmt("MAD %.1f reps = %.0f us, %zu matched of %zu detections", r.timing->mad,
                          r.timing->mad * opt.settings.sim.rep_period * 1e6, r.timing->n_matched,
                          r.timing->n_detections)
                    : std::string("no matched detections"));

    // Null: the same analysis with the T1 dip switched off.
    std::size_t quiet = 0, null_events = 0;
    double worst = 0.0;
    for (std::size_t s = 0; s < 100; ++s) {
        ReplicationOptions n;
        n.settings.sim = short_run(8.8, 1.0);
        n.settings.sim.t1_dip_enabled = false;
        n.n_runs = 5;
        n.base_seed = 10'000 + 5 * s;
        n.thresholds = {14.0};
        n.workers = workers();
        try {
            const auto prof = run_replication(n, layout).dip.finish(n.dip_smoothing);
            null_events += prof.n_events;
            worst = std::max(worst, std::abs(prof.z_post));
            quiet += std::abs(prof.z_post) < 3.0 ? 1 : 0;
        } catch (const Error&) {
            // a seed without multi-qubit jumps counts as not quiet
        }
    }
    try {
        const auto prof = r.dip.finish(r.options.dip_smoothing);
        const auto [off, z] = prof.deepest_near_trigger(3);
        report(2, z <= -5.0 && quiet >= 99,
               "dip >= 5 sigma within 3 points of the trigger; |z| < 3 in >= 99 of 100 null seeds",
               fmt("z %.2f at offset %ld over %zu events; null quiet %zu/100, max |z| %.2f, %zu events",
                   z, off, prof.n_events, quiet, worst, null_events));
    } catch (const Error& e) {
        report(2, false, "dip reproduction", e.what());
    }

    // Threshold sweep on the same 250 runs.
    std::vector<const ThresholdResult*> sweep;
    for (const auto& tr : r.per_threshold) sweep.push_back(&tr);
    std::sort(sweep.begin(), sweep.end(), [](auto* a, auto* b) { return a->threshold < b->threshold; });
    bool monotone = true;
    for (std::size_t i = 1; i < sweep.size(); ++i)
        monotone = monotone && sweep[i]->n_detections <= sweep[i - 1]->n_detections;
    const double tau_main = fit_delays(r.main(), opt.settings.sim.run_duration, opt.delay_bin_width).tau_jump;
    bool envelope = true;
    std::string detail;
    for (const auto* tr : sweep) {
        const auto fit = fit_delays(*tr, opt.settings.sim.run_duration, opt.delay_bin_width);
        const double ratio = fit.tau_jump / tau_main;
        envelope = envelope && fit.converged && ratio >= 0.5 && ratio <= 2.0;
        detail += fmt("%s%g: %zu det, tau %.2f s (x%.2f)", detail.empty() ? "" : "; ", tr->threshold,
                      tr->n_detections, fit.tau_jump, ratio);
    }
    report(6, monotone && envelope,
           "counts non-increasing over thresholds {8,12,14,16}; tau within a factor 2 of threshold 14",
           detail);
}

void delays(const ChipLayout& layout) {
    const double T = 44.0, w = 2.0;
    bool ok = true;
    std::string detail;
    struct Case {
        double tau, p;
    };
    std::uint64_t seed = 77;
    for (const Case c : {Case{16.4, 0.51}, Case{6.5, 0.2}, Case{32.0, 0.05}, Case{10.0, 0.0}}) {
        const auto fit = stats::fit_modified_poisson(
            stats::histogram_delays(sample_model(c.tau, c.p, T, 4000, seed++), w), T);
        const bool good = fit.converged && std::abs(fit.tau_jump / c.tau - 1.0) <= 0.15 &&
                          std::abs(fit.p_coinc - c.p) <= 0.05;
        ok = ok && good;
        detail += fmt("tau %.1f/P %.2f -> %.2f/%.3f; ", c.tau, c.p, fit.tau_jump, fit.p_coinc);
    }

    // Impact times drawn by the simulator; about half of them trigger twice.
    SimConfig sim;
    std::vector<std::vector<double>> triggers;
    std::mt19937_64 dup(9);
    std::bernoulli_distribution twice(0.5);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        sim.seed = 500'000 + i;
        std::vector<double> t;
        for (const auto& ev : generate_impacts(sim, layout)) {
            t.push_back(ev.time);
            if (twice(dup)) t.push_back(ev.time);
        }
        triggers.push_back(std::move(t));
    }
    const auto all = stats::consecutive_delays(triggers);
    const double p_true = static_cast<double>(std::count(all.begin(), all.end(), 0.0)) /
                          static_cast<double>(all.size());
    const auto fit = stats::fit_modified_poisson(stats::delay_histogram(triggers, w), sim.run_duration);
    const double tau_true = 1.0 / sim.impact_rate;
    ok = ok && fit.converged && std::abs(fit.tau_jump / tau_true - 1.0) <= 0.15 &&
         std::abs(fit.p_coinc - p_true) <= 0.05;
    detail += fmt("simulated impacts tau %.1f/P %.3f -> %.2f/%.3f; ", tau_true, p_true, fit.tau_jump,
                  fit.p_coinc);

    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lt(std::log(0.05), std::log(500.0));
    std::uniform_real_distribution<double> lT(std::log(1.0), std::log(500.0));
    std::uniform_real_distribution<double> up(0.0, 0.95);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double tau = std::exp(lt(rng)), Tw = std::exp(lT(rng)), p = up(rng);
        const double cont = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double d) { return stats::modified_poisson_density(d, tau, p, Tw); }, 0.0, Tw, 15, 1e-13);
        worst = std::max(worst, std::abs(cont + p - 1.0));
    }
    ok = ok && worst <= 1e-6;
    detail += fmt("normalization max error %.1e over 1000 draws", worst);
    report(3, ok, "delay fit recovers tau within 15% and P within 0.05; density integrates to 1", detail);
}

void distance(const ChipLayout& layout, const ReplicationResult& reference) {
    const auto& ref_opt = reference.options;
    const auto ref = distance_analysis(reference.main(), layout, ref_opt.settings.detector,
                                       ref_opt.settings.sim.run_duration, ref_opt.distance_bin_mm);
    ReplicationOptions opt;
    opt.n_runs = 25;
    opt.base_seed = 1'000'000;
    opt.workers = workers();
    opt.thresholds = {opt.settings.detector.threshold};
    const auto small = run_replication(opt, layout);
    try {
        const auto fit = distance_analysis(small.main(), layout, opt.settings.detector,
                                           opt.settings.sim.run_duration, opt.distance_bin_mm)
                             .fit;
        const bool ok = fit.usable() && ref.fit.usable() &&
                        std::abs(fit.sigma_mm / ref.fit.sigma_mm - 1.0) <= 0.25;
        report(4, ok, "distance falloff from 25 runs within 25% of the 250-run fit",
               fmt("sigma %.3f mm (25 runs, %zu multi-qubit) vs %.3f mm (250 runs, %zu multi-qubit)",
                   fit.sigma_mm, small.main().n_multi_qubit, ref.fit.sigma_mm,
                   reference.main().n_multi_qubit));
    } catch (const Error& e) {
        report(4, false, "distance falloff from 25 runs", e.what());
    }
}

void table_rates() {
    struct Row {
        double tau, area, expected;  // expected in 1e-3 / (s mm^2)
    };
    bool ok = true;
    std::string detail;
    for (const Row r : {Row{16, 150, 0.4}, Row{50, 39, 0.5}, Row{10, 100, 1.0}, Row{10, 120, 0.8},
                        Row{20, 120, 0.4}}) {
        const double got = stats::round_significant(stats::normalized_rate(r.tau, r.area) * 1e3, 1);
        ok = ok && std::abs(got - r.expected) < 1e-12;
        detail += fmt("%s%g s x %g mm2 -> %g", detail.empty() ? "" : "; ", r.tau, r.area, got);
    }
    report(5, ok, "normalized rate matches five reference rows at one significant figure", detail);
}

void scrambling(const ChipLayout& layout) {
    const std::size_t window = 200, match = 50;
    std::size_t truth = 0, found = 0, edge = 0, false_cls = 0, r_low = 0, r_defined = 0;
    bool r_bounded = true;
    auto check_range = [&](const std::vector<std::optional<double>>& r) {
        for (const auto& v : r)
            if (v && !(*v >= -1.0 && *v <= 1.0)) r_bounded = false;
    };
    for (std::uint64_t s = 0; s < 50; ++s) {
        SimConfig sim;
        sim.seed = 1000 + s;
        const auto series = simulate_tls_series(TlsConfig{}, sim, layout);
        const auto a = analyze_tls(series, DetectorParams{}, window);
        check_range(a.scramble.r);
        const auto events = a.scramble.scrambling_events();
        for (std::size_t t : *series.scramble_iterations) {
            if (t >= a.scramble.r.size() || !a.scramble.r[t]) {
                ++edge;  // no full window on one side: unobservable
                continue;
            }
            ++truth;
            for (const auto& e : events)
                if ((e.iteration > t ? e.iteration - t : t - e.iteration) <= match) {
                    ++found;
                    break;
                }
        }
    }
    for (std::uint64_t s = 0; s < 50; ++s) {
        SimConfig sim;
        sim.seed = 2000 + s;
        sim.impact_rate = 0.0;
        TlsConfig tls;
        tls.diffusing_tls = TlsWalk{s % tls.tls_list.size(), 5e4};
        const auto a = analyze_tls(simulate_tls_series(tls, sim, layout), DetectorParams{}, window);
        check_range(a.scramble.r);
        false_cls += a.scramble.scrambling_events().size();
    }
    for (std::uint64_t s = 0; s < 50; ++s) {
        SimConfig sim;
        sim.seed = 3000 + s;
        sim.impact_rate = 0.0;
        const auto a = analyze_tls(simulate_tls_series(TlsConfig{}, sim, layout), DetectorParams{}, window);
        check_range(a.scramble.r);
        for (const auto& v : a.scramble.r)
            if (v) {
                ++r_defined;
                r_low += *v < 0.4 ? 1 : 0;
            }
    }
    const double recall = truth ? static_cast<double>(found) / static_cast<double>(truth) : 0.0;
    const double low_frac = r_defined ? static_cast<double>(r_low) / static_cast<double>(r_defined) : 1.0;
    report(7, recall >= 0.9 && false_cls == 0 && r_bounded && low_frac < 0.005,
           "scrambling recall >= 0.9, no false classifications, r in [-1,1], stable r < 0.4 below 0.5%",
           fmt("recall %zu/%zu = %.3f (%zu edge scrambles excluded); false %zu; r bounded %s; "
               "stable low fraction %.4f%%",
               found, truth, recall, edge, false_cls, r_bounded ? "yes" : "no", 100.0 * low_frac));
}

void determinism(const ChipLayout& layout) {
    std::vector<std::string> bad;

    ReplicationOptions opt;
    opt.settings.sim = short_run(8.8, 1.0);
    opt.n_runs = 6;
    opt.base_seed = 42;
    opt.workers = 1;
    const auto a = run_replication(opt, layout);
    opt.workers = 3;
    const auto b = run_replication(opt, layout);
    bool same = a.timing_dev == b.timing_dev && a.n_impacts == b.n_impacts &&
                a.dip.finish().mean == b.dip.finish().mean;
    for (std::size_t k = 0; k < a.per_threshold.size(); ++k)
        same = same && a.per_threshold[k].trigger_times == b.per_threshold[k].trigger_times &&
               a.per_threshold[k].n_multi_qubit == b.per_threshold[k].n_multi_qubit;
    if (!same) bad.push_back("replication differs between 1 and 3 workers");

    const fs::path dir = fs::temp_directory_path() / fmt("qimpact_acceptance_%d", static_cast<int>(::getpid()));
    fs::create_directories(dir);
    SimConfig sim = short_run(4.4, 2.0);
    sim.seed = 7;
    const RunRecord rec = simulate_run(sim, layout);
    for (auto enc : {io::Encoding::csv, io::Encoding::qrl1}) {
        const std::string ext = enc == io::Encoding::csv ? ".csv" : ".qrl";
        const fs::path one = dir / ("a" + ext), two = dir / ("b" + ext);
        fs::create_directories(one);
        fs::create_directories(two);
        io::write_run(rec, one / "run.json", {enc, {}});
        io::write_run(simulate_run(sim, layout), two / "run.json", {enc, {}});
        if (slurp(one / "run.json") != slurp(two / "run.json") ||
            slurp(one / ("run" + ext)) != slurp(two / ("run" + ext)))
            bad.push_back(ext.substr(1) + " run files differ between identical seeds");
        if (!(io::read_run(one / "run.json") == rec)) bad.push_back(ext.substr(1) + " run round trip");
    }

    const auto rd = detect_run(rec, DetectorParams{});
    const auto rows = io::detection_rows(0, rd.clusters, sim.rep_period, 0);
    io::write_detections(dir / "det.csv", rows);
    if (io::read_detections(dir / "det.csv") != rows) bad.push_back("detections round trip");

    SimConfig tsim;
    tsim.seed = 5;
    TlsConfig tls;
    tls.n_iterations = 1500;
    const auto series = simulate_tls_series(tls, tsim, layout);
    if (!(simulate_tls_series(tls, tsim, layout) == series)) bad.push_back("TLS series not reproducible");
    io::write_spectra(series, dir / "tls.json");
    if (!(io::read_spectra(dir / "tls.json") == series)) bad.push_back("spectra round trip");

    if (io::config_from_json<SimConfig>(io::config_to_json(sim), "sim") != sim ||
        io::config_from_json<TlsConfig>(io::config_to_json(tls), "tls") != tls ||
        io::config_from_json<DetectorParams>(io::config_to_json(DetectorParams{}), "det") != DetectorParams{})
        bad.push_back("config round trip");

    fs::remove_all(dir);
    std::string detail = bad.empty() ? "replication, run files, detections, spectra and configs" : "";
    for (const auto& s : bad) detail += (detail.empty() ? "" : "; ") + s;
    report(8, bad.empty(), "byte-identical outputs across worker counts and round-trip identity", detail);
}

} // namespace

// With arguments, only the listed criteria run.
int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto want = [&](std::initializer_list<int> ids) {
        return only.empty() || std::any_of(ids.begin(), ids.end(), [&](int id) { return only.count(id) > 0; });
    };
    const auto start = std::chrono::steady_clock::now();
    const ChipLayout layout = read_layout(default_layout_path());
    try {
        ReplicationResult reference;
        if (want({1, 2, 4, 6})) timing_dip_sweep(layout, reference);
        if (want({3})) delays(layout);
        if (want({4})) distance(layout, reference);
        if (want({5})) table_rates();
        if (want({7})) scrambling(layout);
        if (want({8})) determinism(layout);
    } catch (const std::exception& e) {
        for (const auto& [id, line] : results) std::printf("%s\n", line.c_str());
        std::printf("FAIL aborted: %s\n", e.what());
        return 1;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (const auto& [id, line] : results) std::printf("%s\n", line.c_str());
    std::printf("%d of %zu criteria failed (%.0f s)\n", failures, results.size(), secs);
    return failures == 0 ? 0 : 1;
}
