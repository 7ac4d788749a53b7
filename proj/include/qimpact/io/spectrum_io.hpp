// Spectrum series on disk: manifest, `iteration,step_index,ms` spectra and one
// `iteration,p_mr` file per detector qubit.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "qimpact/error.hpp"
#include "qimpact/io/json_codec.hpp"
#include "qimpact/io/manifest.hpp"
#include "qimpact/io/text.hpp"
#include "qimpact/tls.hpp"

namespace qimpact::io {

inline void write_spectra(const SpectrumSeries& s, const std::filesystem::path& manifest_path,
                          const std::optional<std::string>& created_at = std::nullopt) {
    const std::string stem = manifest_path.stem().string();
    const std::string spectra_file = stem + "_spectra.csv";
    {
        std::ofstream out(payload_path(manifest_path, spectra_file), std::ios::binary);
        if (!out) throw Error(Errc::io_failure, "cannot write " + spectra_file);
        out << "iteration,step_index,ms\n";
        std::string line;
        for (std::size_t it = 0; it < s.n_iterations(); ++it)
            for (std::size_t k = 0; k < s.n_steps(); ++k) {
                line = std::to_string(it);
                line += ',';
                line += std::to_string(k);
                line += s.ms(it, k) ? ",1\n" : ",0\n";
                out << line;
            }
        if (!out) throw Error(Errc::io_failure, "write failed for " + spectra_file);
    }
    json detectors = json::object();
    for (std::size_t q = 0; q < s.detector_qubits.size(); ++q) {
        const std::string name = stem + "_detector_" + std::to_string(s.detector_qubits[q]) + ".csv";
        std::ofstream out(payload_path(manifest_path, name), std::ios::binary);
        if (!out) throw Error(Errc::io_failure, "cannot write " + name);
        out << "iteration,p_mr\n";
        for (std::size_t it = 0; it < s.detector_probs[q].size(); ++it)
            out << it << ',' << format_double(s.detector_probs[q][it]) << '\n';
        if (!out) throw Error(Errc::io_failure, "write failed for " + name);
        detectors[std::to_string(s.detector_qubits[q])] = name;
    }
    json m;
    m["format_version"] = kFormatVersion;
    m["created_at"] = created_at ? json(*created_at) : json(nullptr);
    m["mode"] = to_string(s.mode);
    m["layout_path"] = s.layout_path;
    m["seed"] = s.seed;
    m["config"] = config_to_json(s.sim);
    m["tls_config"] = config_to_json(s.tls);
    m["monitored_qubit"] = s.monitored_qubit;
    m["detector_qubits"] = s.detector_qubits;
    m["shifts"] = s.shifts;
    m["payload"] = {{"encoding", "csv"}, {"spectra", spectra_file}, {"detectors", detectors}};
    if (s.impacts || s.scramble_iterations) {
        json gt = json::object();
        if (s.impacts) gt["impacts"] = impacts_to_json(*s.impacts);
        if (s.scramble_iterations) gt["scramble_iterations"] = *s.scramble_iterations;
        m["ground_truth"] = gt;
    } else {
        m["ground_truth"] = nullptr;
    }
    write_json(manifest_path, m);
}

inline SpectrumSeries read_spectra(const std::filesystem::path& manifest_path) {
    const json m = read_manifest(manifest_path);
    const std::string ctx = manifest_path.filename().string();
    if (m["mode"] != "tls_interleaved")
        throw Error(Errc::schema_error, ctx + ": not a spectrum series");
    for (const char* key : {"monitored_qubit", "detector_qubits", "shifts"})
        if (!m.contains(key)) throw Error(Errc::schema_error, ctx + ": missing field '" + key + "'");
    SpectrumSeries s;
    s.mode = RecordMode::tls_interleaved;
    s.sim = config_from_json<SimConfig>(m["config"], ctx + ": config");
    s.tls = config_from_json<TlsConfig>(m["tls_config"], ctx + ": tls_config");
    s.layout_path = m.value("layout_path", std::string{});
    s.seed = m.value("seed", std::uint64_t{0});
    detail::decode(m["monitored_qubit"], s.monitored_qubit, ctx, "monitored_qubit");
    detail::decode(m["detector_qubits"], s.detector_qubits, ctx, "detector_qubits");
    detail::decode(m["shifts"], s.shifts, ctx, "shifts");
    if (s.shifts.size() != s.tls.n_steps)
        throw Error(Errc::length_mismatch, ctx + ": shifts disagree with n_steps");
    if (m.contains("ground_truth") && m["ground_truth"].is_object()) {
        const json& gt = m["ground_truth"];
        if (gt.contains("impacts")) s.impacts = impacts_from_json(gt["impacts"], ctx);
        if (gt.contains("scramble_iterations")) {
            s.scramble_iterations.emplace();
            detail::decode(gt["scramble_iterations"], *s.scramble_iterations, ctx,
                           "scramble_iterations");
        }
    }

    const std::size_t n_it = s.tls.n_iterations, n_steps = s.tls.n_steps;
    const auto& p = m["payload"];
    {
        const auto file = payload_path(manifest_path, p["spectra"].get<std::string>());
        std::ifstream in(file, std::ios::binary);
        if (!in) throw Error(Errc::io_failure, "cannot open " + file.string());
        const std::string what = file.filename().string();
        std::string line;
        if (!read_line(in, line)) throw Error(Errc::parse_error, what + ": empty file");
        const auto col = header_columns(line, {"iteration", "step_index", "ms"}, what);
        s.frames = BitVector(n_it * n_steps);
        BitVector seen(n_it * n_steps);
        std::vector<std::string_view> f;
        std::size_t row = 1, filled = 0;
        while (read_line(in, line)) {
            ++row;
            if (line.empty()) continue;
            split_csv(line, f);
            if (f.size() < 3) throw row_error(what, row, "expected 3 fields");
            std::size_t it = 0, k = 0;
            if (!parse_number(f[col[0]], it) || !parse_number(f[col[1]], k))
                throw row_error(what, row, "iteration and step_index must be integers");
            const auto v = trim(f[col[2]]);
            if (v != "0" && v != "1") throw row_error(what, row, "ms must be 0 or 1");
            if (it >= n_it || k >= n_steps)
                throw Error(Errc::length_mismatch, what + ": row " + std::to_string(row) +
                                                       " lies outside the configured series");
            const std::size_t bit = it * n_steps + k;
            if (seen[bit]) throw row_error(what, row, "duplicate (iteration, step_index)");
            seen.set(bit, true);
            s.frames.set(bit, v == "1");
            ++filled;
        }
        if (filled != n_it * n_steps)
            throw Error(Errc::length_mismatch, what + ": spectrum rows disagree with manifest");
    }
    for (QubitId id : s.detector_qubits) {
        const auto key = std::to_string(id);
        if (!p["detectors"].contains(key))
            throw Error(Errc::schema_error, ctx + ": no detector file for qubit " + key);
        const auto file = payload_path(manifest_path, p["detectors"][key].get<std::string>());
        std::ifstream in(file, std::ios::binary);
        if (!in) throw Error(Errc::io_failure, "cannot open " + file.string());
        const std::string what = file.filename().string();
        std::string line;
        if (!read_line(in, line)) throw Error(Errc::parse_error, what + ": empty file");
        const auto col = header_columns(line, {"iteration", "p_mr"}, what);
        std::vector<double> probs(n_it, 0.0);
        BitVector seen(n_it);
        std::vector<std::string_view> f;
        std::size_t row = 1, filled = 0;
        while (read_line(in, line)) {
            ++row;
            if (line.empty()) continue;
            split_csv(line, f);
            if (f.size() < 2) throw row_error(what, row, "expected 2 fields");
            std::size_t it = 0;
            double v = 0.0;
            if (!parse_number(f[col[0]], it)) throw row_error(what, row, "iteration must be an integer");
            if (!parse_number(f[col[1]], v) || !(v >= 0.0 && v <= 1.0))
                throw row_error(what, row, "p_mr must be a probability");
            if (it >= n_it)
                throw Error(Errc::length_mismatch, what + ": iteration beyond the series");
            if (seen[it]) throw row_error(what, row, "duplicate iteration");
            seen.set(it, true);
            probs[it] = v;
            ++filled;
        }
        if (filled != n_it)
            throw Error(Errc::length_mismatch, what + ": detector rows disagree with manifest");
        s.detector_probs.push_back(std::move(probs));
    }
    return s;
}

} // namespace qimpact::io
