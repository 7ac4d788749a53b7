// qimpact command-line driver.
//
// Exit codes: 0 success, 2 usage, 3 data error, 4 insufficient statistics.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "qimpact/io/config_file.hpp"
#include "qimpact/io/detections_io.hpp"
#include "qimpact/io/json_codec.hpp"
#include "qimpact/io/manifest.hpp"
#include "qimpact/io/run_io.hpp"
#include "qimpact/io/spectrum_io.hpp"
#include "qimpact/io/text.hpp"
#include "qimpact/pipeline.hpp"
#include "qimpact/stats/rate.hpp"

namespace fs = std::filesystem;
using namespace qimpact;
using io::format_double;
using io::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kInsufficient = 4;

int exit_code(const Error& e) { return e.code() == Errc::insufficient_data ? kInsufficient : kData; }

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::size_t workers = 1;
    std::optional<double> threshold;
    std::optional<double> area_mm2;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "base seed (overrides the config file)");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
    app->add_option("--threshold", c.threshold, "detection threshold")->check(CLI::PositiveNumber);
    app->add_option("--area-mm2", c.area_mm2, "chip area for rate normalisation")
        ->check(CLI::PositiveNumber);
}

// defaults < config file < flags
io::Settings effective_settings(const Common& c) {
    io::Settings s;
    if (!c.config.empty()) s = io::load_config(c.config, s);
    if (c.seed) s.sim.seed = *c.seed;
    if (c.threshold) {
        s.detector.threshold = *c.threshold;
        s.detector.averaged_threshold = *c.threshold;
    }
    if (s.layout.empty()) s.layout = default_layout_path();
    s.sim.validate();
    s.detector.validate();
    return s;
}

json settings_json(const io::Settings& s) {
    return {{"sim", io::config_to_json(s.sim)},
            {"tls", io::config_to_json(s.tls)},
            {"detector", io::config_to_json(s.detector)},
            {"layout", s.layout},
            {"n_runs", s.n_runs}};
}

void write_effective_config(const fs::path& out, const std::string& command, const io::Settings& s,
                            json extra = json::object()) {
    json j = {{"format_version", io::kFormatVersion}, {"command", command}, {"settings", settings_json(s)}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    io::write_json(out / "effective_config.json", j);
}

fs::path prepare_out(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw Error(Errc::io_failure, "cannot create output directory " + dir);
    return p;
}

std::string run_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%04zu.json", i);
    return buf;
}

/// Expands directories into the manifests they contain, sorted by name.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& s : inputs) {
        fs::path p(s);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(p))
                if (e.path().extension() == ".json" && e.path().filename() != "effective_config.json" &&
                    e.path().filename().string().rfind("run_", 0) == 0)
                    found.push_back(e.path());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(p);
        }
    }
    return out;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(Errc::io_failure, "cannot write " + p.string());
    return f;
}

// ---------------------------------------------------------------------------
// Report tables

void write_dip_csv(const fs::path& p, const stats::DipProfile& d) {
    auto f = open_out(p);
    f << "offset,mean_p_m0,count,smoothed,z\n";
    for (long o = -d.window; o <= d.window; ++o)
        f << o << ',' << format_double(d.at(o)) << ',' << d.counts[d.index(o)] << ','
          << format_double(d.smoothed[d.index(o)]) << ',' << format_double(d.z(o)) << '\n';
}

json dip_json(const stats::DipProfile& d, long reach) {
    const auto [off, zmin] = d.deepest_near_trigger(reach);
    return {{"n_events", d.n_events},
            {"window", d.window},
            {"background_mean", d.background_mean},
            {"background_sigma", d.background_sigma},
            {"z_post", d.z_post},
            {"deepest_offset", off},
            {"deepest_z", zmin}};
}

void write_delay_csv(const fs::path& p, const stats::DelayHistogram& h, const stats::DelayFit* fit) {
    auto f = open_out(p);
    f << "bin_lo_s,bin_hi_s,count,expected\n";
    const auto n_bins = fit ? static_cast<std::size_t>(std::ceil(fit->run_duration / h.bin_width - 1e-12))
                            : h.counts.size();
    std::vector<double> m;
    if (fit) m = stats::modified_poisson_bin_masses(fit->tau_jump, fit->p_coinc, fit->run_duration,
                                                    h.bin_width, n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        f << format_double(static_cast<double>(i) * h.bin_width) << ','
          << format_double(static_cast<double>(i + 1) * h.bin_width) << ','
          << (i < h.counts.size() ? h.counts[i] : 0) << ',';
        if (fit) f << format_double(m[i] * static_cast<double>(h.total));
        f << '\n';
    }
}

json delay_json(const stats::DelayHistogram& h, const stats::DelayFit& fit) {
    return {{"n_delays", h.total},
            {"bin_width", h.bin_width},
            {"run_duration", fit.run_duration},
            {"tau_jump", fit.tau_jump},
            {"p_coinc", fit.p_coinc},
            {"chi2", fit.chi2},
            {"ndf", fit.ndf},
            {"converged", fit.converged},
            {"first_bin_count", h.counts.empty() ? 0 : h.counts[0]}};
}

void write_distance_csv(const fs::path& dir, const stats::DistanceReport& r) {
    auto f = open_out(dir / "distance_pairs.csv");
    f << "qubit_a,qubit_b,distance_mm,coincidences,rate_per_hour\n";
    for (const auto& p : r.pairs)
        f << p.a << ',' << p.b << ',' << format_double(p.distance_mm) << ',' << p.coincidences << ','
          << format_double(p.rate_per_hour) << '\n';
    auto g = open_out(dir / "distance_bins.csv");
    g << "lo_mm,hi_mm,n_pairs,mean_rate_per_hour,fit_rate_per_hour\n";
    for (const auto& b : r.bins) {
        const double mid = 0.5 * (b.lo_mm + b.hi_mm);
        g << format_double(b.lo_mm) << ',' << format_double(b.hi_mm) << ',' << b.n_pairs << ','
          << format_double(b.mean_rate_per_hour) << ',';
        if (r.fit.usable())
            g << format_double(r.fit.amplitude * std::exp(-mid * mid / (2 * r.fit.sigma_mm * r.fit.sigma_mm)));
        g << '\n';
    }
}

json distance_json(const stats::DistanceReport& r) {
    return {{"sigma_mm", r.fit.sigma_mm},
            {"amplitude_per_hour", r.fit.amplitude},
            {"converged", r.fit.converged},
            {"underdetermined", r.fit.underdetermined},
            {"diverged", r.fit.diverged},
            {"n_pairs", r.pairs.size()}};
}

// Loads run records, listing unreadable ones instead of stopping.
std::vector<std::pair<fs::path, RunRecord>> load_runs(const std::vector<fs::path>& files,
                                                     std::vector<std::string>& errors) {
    std::vector<std::pair<fs::path, RunRecord>> runs;
    for (const auto& f : files) {
        try {
            runs.emplace_back(f, io::read_run(f));
        } catch (const Error& e) {
            errors.push_back(f.string() + ": " + to_string(e.code()) + ": " + e.what());
        }
    }
    return runs;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_simulate(const Common& c, std::optional<std::size_t> n_runs_flag, const std::string& encoding) {
    io::Settings s = effective_settings(c);
    if (n_runs_flag) s.n_runs = *n_runs_flag;
    if (s.n_runs == 0) {
        std::cout << "0 runs requested; nothing written\n";
        return kOk;
    }
    const ChipLayout layout = read_layout(s.layout);
    const fs::path out = prepare_out(c.out);
    io::WriteOptions opt;
    opt.encoding = encoding == "qrl1" ? io::Encoding::qrl1 : io::Encoding::csv;
    const std::uint64_t base = s.sim.seed;
    auto summaries = parallel_map(s.n_runs, c.workers, [&](std::size_t i) {
        SimConfig cfg = s.sim;
        cfg.seed = base + i;
        const RunRecord rec = simulate_run(cfg, layout, s.layout);
        io::write_run(rec, out / run_name(i), opt);
        return rec.ground_truth->size();
    });
    for (std::size_t i = 0; i < summaries.size(); ++i)
        std::cout << run_name(i) << " seed " << base + i << " impacts " << summaries[i] << '\n';
    write_effective_config(out, "simulate", s, {{"encoding", encoding}});
    return kOk;
}

int cmd_simulate_tls(const Common& c) {
    io::Settings s = effective_settings(c);
    s.tls.validate();
    const ChipLayout layout = read_layout(s.layout);
    const fs::path out = prepare_out(c.out);
    const SpectrumSeries series = simulate_tls_series(s.tls, s.sim, layout, s.layout);
    io::write_spectra(series, out / "tls_series.json");
    std::cout << "tls_series.json iterations " << series.n_iterations() << " impacts "
              << series.impacts->size() << " scrambles " << series.scramble_iterations->size()
              << " monitored qubit " << series.monitored_qubit << '\n';
    write_effective_config(out, "simulate-tls", s);
    return kOk;
}

int cmd_detect(const Common& c, const std::vector<std::string>& inputs) {
    const io::Settings s = effective_settings(c);
    const auto files = expand_inputs(inputs);
    const fs::path out = prepare_out(c.out);
    std::vector<std::string> errors;
    std::vector<io::DetectionRow> rows;
    std::vector<long> dev;
    std::size_t n_det = 0, n_multi = 0, n_truth = 0, n_runs = 0, cluster_id = 0;
    json per_file = json::array();
    for (std::size_t i = 0; i < files.size(); ++i) {
        try {
            const json m = io::read_manifest(files[i]);
            if (m["mode"] == "tls_interleaved") {
                const SpectrumSeries series = io::read_spectra(files[i]);
                const TlsAnalysis a = analyze_tls(series, s.detector);
                auto r = io::detection_rows(i, a.clusters, series.tls.iteration_period, cluster_id);
                cluster_id += a.clusters.clusters.size();
                rows.insert(rows.end(), r.begin(), r.end());
                n_det += a.detections.size();
                n_multi += a.clusters.multi_qubit().size();
                per_file.push_back({{"file", files[i].string()}, {"detections", a.detections.size()},
                                    {"mode", "averaged"}});
            } else {
                const RunRecord rec = io::read_run(files[i]);
                const RunDetections rd = detect_run(rec, s.detector);
                auto r = io::detection_rows(i, rd.clusters, rec.config.rep_period, cluster_id);
                cluster_id += rd.clusters.clusters.size();
                rows.insert(rows.end(), r.begin(), r.end());
                n_det += rd.detections.size();
                n_multi += rd.clusters.multi_qubit().size();
                if (rec.ground_truth) {
                    const long reach = static_cast<long>(resolve(s.detector, rec.config.rep_period).half_width);
                    auto d = timing_deviations(rd.detections, *rec.ground_truth, rec.config, reach);
                    dev.insert(dev.end(), d.begin(), d.end());
                    n_truth += rec.ground_truth->size();
                }
                per_file.push_back({{"file", files[i].string()}, {"detections", rd.detections.size()}});
            }
            ++n_runs;
        } catch (const Error& e) {
            errors.push_back(files[i].string() + ": " + to_string(e.code()) + ": " + e.what());
        }
    }
    io::write_detections(out / "detections.csv", rows);
    json summary = {{"n_files", files.size()},
                    {"n_runs_read", n_runs},
                    {"n_detections", n_det},
                    {"n_multi_qubit_jumps", n_multi},
                    {"threshold", s.detector.threshold},
                    {"files", per_file},
                    {"errors", errors}};
    if (!dev.empty()) {
        const TimingSummary t = summarize_timing(dev, n_det);
        summary["timing"] = {{"n_true_impacts", n_truth}, {"n_matched", t.n_matched},
                             {"median_offset_reps", t.median}, {"mad_reps", t.mad},
                             {"mad_seconds", t.mad * s.sim.rep_period}};
        std::cout << "timing: median offset " << t.median << " reps, MAD " << t.mad << " reps\n";
    }
    io::write_json(out / "detect_summary.json", summary);
    write_effective_config(out, "detect", s);
    std::cout << "detections " << n_det << " multi-qubit jumps " << n_multi << " from " << n_runs
              << " file(s)\n";
    for (const auto& e : errors) std::cerr << "error: " << e << '\n';
    return errors.empty() ? kOk : kData;
}

// Rebuilds per-run clusters from a detections table.
std::map<std::size_t, std::vector<JumpCluster>> clusters_by_run(const std::vector<io::DetectionRow>& rows) {
    std::map<std::size_t, std::map<std::size_t, JumpCluster>> tmp;
    for (const auto& r : rows) {
        auto& c = tmp[r.run_id][r.cluster_id];
        if (c.members.empty()) c.start = r.detection.t_trigger;
        c.members.push_back(r.detection);
        c.start = std::min(c.start, r.detection.t_trigger);
        c.end = std::max(c.end, r.detection.t_trigger);
    }
    std::map<std::size_t, std::vector<JumpCluster>> out;
    for (auto& [run, cs] : tmp)
        for (auto& [id, c] : cs) out[run].push_back(std::move(c));
    return out;
}

struct AnalyzeArgs {
    std::string name;
    std::string detections;
    std::vector<std::string> inputs;
    std::optional<double> tau;
    std::optional<std::size_t> n_runs;
    long dip_window = 100;
};

int cmd_analyze(const Common& c, const AnalyzeArgs& a) {
    const io::Settings s = effective_settings(c);
    const fs::path out = prepare_out(c.out);
    auto need_detections = [&] {
        if (a.detections.empty()) throw CLI::ValidationError("--detections", "required for this analysis");
        return io::read_detections(fs::path(a.detections));
    };

    if (a.name == "rate") {
        double tau = 0.0;
        if (a.tau) {
            tau = *a.tau;
        } else {
            const auto rows = need_detections();
            std::map<std::size_t, std::vector<double>> times;
            for (const auto& r : rows) times[r.run_id].push_back(r.t_seconds);
            std::vector<std::vector<double>> per_run;
            for (auto& [_, t] : times) per_run.push_back(t);
            tau = stats::fit_modified_poisson(stats::delay_histogram(per_run, 2.0), s.sim.run_duration).tau_jump;
        }
        double area = 0.0;
        if (c.area_mm2) {
            area = *c.area_mm2;
        } else {
            area = read_layout(s.layout).bounding_box().area();
        }
        const double rate = stats::normalized_rate(tau, area);
        io::write_json(out / "rate.json", {{"tau_jump", tau}, {"area_mm2", area}, {"rate_per_s_mm2", rate}});
        std::cout << "normalized rate " << rate << " /(s mm^2) = " << rate * 1e3 << "e-3\n";
        return kOk;
    }

    if (a.name == "scramble") {
        if (a.inputs.size() != 1) throw CLI::ValidationError("scramble", "expects one TLS series manifest");
        const SpectrumSeries series = io::read_spectra(fs::path(a.inputs.front()));
        const TlsAnalysis t = analyze_tls(series, s.detector);
        auto f = open_out(out / "scramble_r.csv");
        f << "iteration,r,flagged\n";
        for (std::size_t i = 0; i < t.scramble.r.size(); ++i) {
            f << i << ',';
            if (t.scramble.r[i]) f << format_double(*t.scramble.r[i]);
            f << ',' << (t.scramble.r[i] && *t.scramble.r[i] < t.scramble.threshold ? 1 : 0) << '\n';
        }
        json events = json::array();
        for (const auto& e : t.scramble.episodes)
            events.push_back({{"iteration", e.iteration}, {"r_min", e.r_min},
                              {"scrambling", e.is_scrambling()}});
        json rep = {{"threshold", t.scramble.threshold},
                    {"fraction_below", t.scramble.fraction_below},
                    {"n_multi_qubit_jumps", t.scramble.n_multi_qubit_jumps},
                    {"n_scrambling", t.scramble.n_scrambling},
                    {"fraction_jumps_with_dip", t.scramble.fraction_jumps_with_dip},
                    {"episodes", events}};
        if (series.scramble_iterations) rep["true_scramble_iterations"] = *series.scramble_iterations;
        io::write_json(out / "scramble.json", rep);
        std::cout << "scrambling events " << t.scramble.n_scrambling << " of " << t.scramble.episodes.size()
                  << " low-r episodes; r < " << t.scramble.threshold << " for "
                  << 100.0 * t.scramble.fraction_below << "% of iterations\n";
        return kOk;
    }

    const auto rows = need_detections();
    const auto by_run = clusters_by_run(rows);
    std::vector<std::string> errors;
    const auto runs = load_runs(expand_inputs(a.inputs), errors);
    for (const auto& e : errors) std::cerr << "error: " << e << '\n';
    if (!errors.empty()) return kData;
    const double T = runs.empty() ? s.sim.run_duration : runs.front().second.config.run_duration;

    if (a.name == "dip") {
        if (runs.empty()) throw CLI::ValidationError("dip", "needs the run manifests the detections came from");
        stats::DipAccumulator acc(a.dip_window);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            auto it = by_run.find(i);
            if (it == by_run.end()) continue;
            const RunRecord& rec = runs[i].second;
            for (const auto& cl : it->second)
                if (cl.multi_qubit())
                    for (const auto& d : cl.members) acc.add(rec.m0[rec.index_of(d.qubit_id)], d.t_trigger);
        }
        const auto prof = acc.finish(10.0);
        write_dip_csv(out / "dip_profile.csv", prof);
        io::write_json(out / "dip.json", dip_json(prof, 3));
        std::cout << "dip: " << prof.n_events << " events, z(post-trigger) = " << prof.z_post << '\n';
        return kOk;
    }
    if (a.name == "delays") {
        std::map<std::size_t, std::vector<double>> times;
        for (const auto& r : rows) times[r.run_id].push_back(r.t_seconds);
        std::vector<std::vector<double>> per_run;
        for (auto& [_, t] : times) per_run.push_back(t);
        const auto h = stats::delay_histogram(per_run, 2.0);
        const auto fit = stats::fit_modified_poisson(h, T);
        write_delay_csv(out / "delay_histogram.csv", h, &fit);
        json j = delay_json(h, fit);
        std::size_t n_truth = 0;
        for (const auto& [_, rec] : runs)
            if (rec.ground_truth) n_truth += rec.ground_truth->size();
        if (n_truth) j["true_mean_interval"] = static_cast<double>(runs.size()) * T / static_cast<double>(n_truth);
        io::write_json(out / "delays.json", j);
        std::cout << "delays: tau = " << fit.tau_jump << " s, P_coinc = " << fit.p_coinc << '\n';
        return kOk;
    }
    if (a.name == "distance") {
        const ChipLayout layout = read_layout(s.layout);
        std::vector<JumpCluster> multi;
        for (const auto& [_, cs] : by_run)
            for (const auto& cl : cs)
                if (cl.multi_qubit()) multi.push_back(cl);
        std::size_t n_runs = runs.size();
        if (a.n_runs) n_runs = *a.n_runs;
        if (n_runs == 0) n_runs = by_run.empty() ? 0 : by_run.rbegin()->first + 1;
        if (n_runs == 0) throw Error(Errc::insufficient_data, "no runs");
        const auto rep = stats::coincidence_vs_distance(multi, layout, analysed_qubits(layout, s.detector),
                                                        static_cast<double>(n_runs) * T / 3600.0, 1.0);
        write_distance_csv(out, rep);
        io::write_json(out / "distance.json", distance_json(rep));
        std::cout << "distance: sigma = " << rep.fit.sigma_mm << " mm"
                  << (rep.fit.usable() ? "" : " (fit not usable)") << '\n';
        return rep.fit.underdetermined ? kInsufficient : kOk;
    }
    throw CLI::ValidationError("analyze", "unknown analysis '" + a.name + "'");
}

void write_sweep_csv(const fs::path& p, const ReplicationResult& r, json& sweep) {
    auto f = open_out(p);
    f << "threshold,n_detections,n_multi_qubit,tau_jump,p_coinc\n";
    sweep = json::array();
    for (const auto& tr : r.per_threshold) {
        json e = {{"threshold", tr.threshold}, {"n_detections", tr.n_detections},
                  {"n_multi_qubit", tr.n_multi_qubit}};
        f << format_double(tr.threshold) << ',' << tr.n_detections << ',' << tr.n_multi_qubit << ',';
        try {
            const auto fit = fit_delays(tr, r.options.settings.sim.run_duration, r.options.delay_bin_width);
            e["tau_jump"] = fit.tau_jump;
            e["p_coinc"] = fit.p_coinc;
            f << format_double(fit.tau_jump) << ',' << format_double(fit.p_coinc);
        } catch (const Error&) {
            f << ',';
        }
        f << '\n';
        sweep.push_back(e);
    }
}

ReplicationOptions replication_options(const Common& c, const io::Settings& s, std::size_t n_runs) {
    ReplicationOptions o;
    o.settings = s;
    o.n_runs = n_runs;
    o.base_seed = s.sim.seed;
    o.workers = c.workers;
    return o;
}

int cmd_replicate(const Common& c, std::optional<std::size_t> runs_flag) {
    io::Settings s = effective_settings(c);
    const std::size_t n_runs = runs_flag.value_or(250);
    const ChipLayout layout = read_layout(s.layout);
    const fs::path out = prepare_out(c.out);
    std::string stage = "simulate+detect";
    try {
        const ReplicationResult r = run_replication(replication_options(c, s, n_runs), layout, s.layout);
        const auto& main = r.main();
        json summary = {{"n_runs", n_runs}, {"base_seed", s.sim.seed}, {"n_impacts", r.n_impacts},
                        {"threshold", s.detector.threshold}, {"n_detections", main.n_detections},
                        {"n_multi_qubit_jumps", main.n_multi_qubit}};
        json checks = json::object();

        stage = "timing";
        if (!r.timing) throw Error(Errc::insufficient_data, "no detections matched to impacts");
        summary["timing"] = {{"n_matched", r.timing->n_matched}, {"median_offset_reps", r.timing->median},
                             {"mad_reps", r.timing->mad}, {"mad_seconds", r.timing->mad * s.sim.rep_period}};
        checks["timing_mad_le_5_steps"] = r.timing->mad <= 5.0;
        {
            auto f = open_out(out / "timing_deviations.csv");
            f << "offset_reps\n";
            for (long d : r.timing_dev) f << d << '\n';
        }

        stage = "dip";
        const auto prof = r.dip.finish(r.options.dip_smoothing);
        write_dip_csv(out / "dip_profile.csv", prof);
        summary["dip"] = dip_json(prof, 3);
        checks["dip_ge_5_sigma_within_3_points"] = prof.deepest_near_trigger(3).second <= -5.0;

        stage = "delays";
        stats::DelayHistogram h;
        const auto fit = fit_delays(main, s.sim.run_duration, r.options.delay_bin_width, &h);
        write_delay_csv(out / "delay_histogram.csv", h, &fit);
        summary["delays"] = delay_json(h, fit);
        const double continuous_first =
            stats::modified_poisson_bin_masses(fit.tau_jump, 0.0, fit.run_duration, h.bin_width, 1).front();
        checks["delay_first_bin_excess"] =
            static_cast<double>(h.counts.empty() ? 0 : h.counts[0]) >
            continuous_first * static_cast<double>(h.total) && fit.p_coinc > 0.0;

        stage = "distance";
        const auto dist = distance_analysis(main, layout, s.detector, s.sim.run_duration, r.options.distance_bin_mm);
        write_distance_csv(out, dist);
        summary["distance"] = distance_json(dist);
        checks["distance_fit_finite_positive"] = dist.fit.usable();

        stage = "sweep";
        json sweep;
        write_sweep_csv(out / "threshold_sweep.csv", r, sweep);
        summary["threshold_sweep"] = sweep;

        stage = "write";
        std::vector<io::DetectionRow> rows;
        std::size_t cid = 0;
        for (std::size_t i = 0; i < main.runs.size(); ++i) {
            auto rr = io::detection_rows(i, main.runs[i].clusters, s.sim.rep_period, cid);
            cid += main.runs[i].clusters.clusters.size();
            rows.insert(rows.end(), rr.begin(), rr.end());
        }
        io::write_detections(out / "detections.csv", rows);
        bool all = true;
        for (auto& [k, v] : checks.items()) all = all && v.get<bool>();
        summary["checks"] = checks;
        summary["pass"] = all;
        io::write_json(out / "summary.json", summary);
        write_effective_config(out, "replicate-appendix", s, {{"n_runs", n_runs}});
        std::cout << "timing MAD " << r.timing->mad << " reps; dip z " << prof.deepest_near_trigger(3).second
                  << "; tau " << fit.tau_jump << " s, P_coinc " << fit.p_coinc << "; sigma "
                  << dist.fit.sigma_mm << " mm\n";
        for (auto& [k, v] : checks.items()) std::cout << (v.get<bool>() ? "PASS " : "FAIL ") << k << '\n';
    } catch (const Error& e) {
        std::cerr << "stage " << stage << " failed: " << e.what() << '\n';
        return exit_code(e);
    }
    return kOk;
}

int cmd_sweep(const Common& c, std::optional<std::size_t> runs_flag, const std::vector<double>& thresholds) {
    io::Settings s = effective_settings(c);
    const std::size_t n_runs = runs_flag.value_or(s.n_runs);
    const ChipLayout layout = read_layout(s.layout);
    const fs::path out = prepare_out(c.out);
    ReplicationOptions o = replication_options(c, s, n_runs);
    o.thresholds = thresholds;
    const ReplicationResult r = run_replication(o, layout, s.layout);
    json sweep;
    write_sweep_csv(out / "threshold_sweep.csv", r, sweep);
    std::vector<std::pair<double, std::size_t>> counts;
    for (const auto& tr : r.per_threshold) counts.emplace_back(tr.threshold, tr.n_detections);
    std::sort(counts.begin(), counts.end());
    bool monotone = true;
    for (std::size_t i = 1; i < counts.size(); ++i) monotone = monotone && counts[i].second <= counts[i - 1].second;
    io::write_json(out / "threshold_sweep.json", {{"n_runs", n_runs}, {"sweep", sweep}, {"monotone", monotone}});
    write_effective_config(out, "sweep-threshold", s, {{"n_runs", n_runs}, {"thresholds", thresholds}});
    for (const auto& [t, n] : counts) std::cout << "threshold " << t << " detections " << n << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radiation-impact and TLS-scrambling analysis for multi-qubit jump detectors"};
    app.require_subcommand(1);

    Common c_sim, c_tls, c_det, c_an, c_rep, c_sw;
    std::optional<std::size_t> sim_runs, rep_runs, sw_runs;
    std::string encoding = "csv";
    auto* sim = app.add_subcommand("simulate", "simulate detector runs");
    add_common(sim, c_sim);
    sim->add_option("--runs", sim_runs, "number of runs (seeds seed, seed+1, ...)");
    sim->add_option("--encoding", encoding, "shot payload encoding")->check(CLI::IsMember({"csv", "qrl1"}));

    auto* tls = app.add_subcommand("simulate-tls", "simulate an interleaved TLS spectroscopy series");
    add_common(tls, c_tls);

    std::vector<std::string> det_inputs;
    auto* det = app.add_subcommand("detect", "detect charge jumps in run files");
    add_common(det, c_det);
    det->add_option("inputs", det_inputs, "run manifests or directories")->required();

    AnalyzeArgs an_args;
    auto* an = app.add_subcommand("analyze", "dip | delays | distance | rate | scramble");
    add_common(an, c_an);
    an->add_option("name", an_args.name, "analysis")
        ->required()
        ->check(CLI::IsMember({"dip", "delays", "distance", "rate", "scramble"}));
    an->add_option("inputs", an_args.inputs, "run manifests, directories or a TLS series manifest");
    an->add_option("--detections", an_args.detections, "detections CSV from `detect`");
    an->add_option("--tau", an_args.tau, "mean time between impacts in seconds (rate)");
    an->add_option("--n-runs", an_args.n_runs, "runs behind the detections (distance)");
    an->add_option("--dip-window", an_args.dip_window, "repetitions either side of the trigger (dip)");

    auto* rep = app.add_subcommand("replicate-appendix", "simulation study of detector timing and statistics");
    add_common(rep, c_rep);
    rep->add_option("--runs", rep_runs, "number of runs (default 250)");

    std::vector<double> thresholds{8, 12, 14, 16};
    auto* sw = app.add_subcommand("sweep-threshold", "detection counts and fits across thresholds");
    add_common(sw, c_sw);
    sw->add_option("--runs", sw_runs, "number of simulated runs");
    sw->add_option("--thresholds", thresholds, "thresholds to sweep")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*sim) return cmd_simulate(c_sim, sim_runs, encoding);
        if (*tls) return cmd_simulate_tls(c_tls);
        if (*det) return cmd_detect(c_det, det_inputs);
        if (*an) return cmd_analyze(c_an, an_args);
        if (*rep) return cmd_replicate(c_rep, rep_runs);
        if (*sw) return cmd_sweep(c_sw, sw_runs, thresholds);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
