// Detections table: `run_id,qubit_id,t_trigger_index,t_trigger_seconds,peak_value,cluster_id`.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qimpact/detector.hpp"
#include "qimpact/error.hpp"
#include "qimpact/io/text.hpp"

namespace qimpact::io {

struct DetectionRow {
    std::size_t run_id = 0;
    JumpDetection detection;
    double t_seconds = 0.0;
    std::size_t cluster_id = 0;  // unique within the file

    friend bool operator==(const DetectionRow&, const DetectionRow&) = default;
};

/// Flattens clustered detections of consecutive runs; cluster ids continue
/// across runs starting at `first_cluster_id`.
inline std::vector<DetectionRow> detection_rows(std::size_t run_id, const ClusteredJumps& cj,
                                                double sample_period,
                                                std::size_t first_cluster_id = 0) {
    std::vector<DetectionRow> rows;
    std::size_t cid = first_cluster_id;
    for (const auto& c : cj.clusters) {
        for (const auto& d : c.members)
            rows.push_back({run_id, d, static_cast<double>(d.t_trigger) * sample_period, cid});
        ++cid;
    }
    return rows;
}

inline void write_detections(std::ostream& out, const std::vector<DetectionRow>& rows) {
    out << "run_id,qubit_id,t_trigger_index,t_trigger_seconds,peak_value,cluster_id\n";
    for (const auto& r : rows)
        out << r.run_id << ',' << r.detection.qubit_id << ',' << r.detection.t_trigger << ','
            << format_double(r.t_seconds) << ',' << format_double(r.detection.peak_value) << ','
            << r.cluster_id << '\n';
}

inline std::vector<DetectionRow> read_detections(std::istream& in,
                                                 const std::string& what = "detections") {
    std::string line;
    if (!read_line(in, line)) throw Error(Errc::parse_error, what + ": empty file");
    const auto col = header_columns(line,
                                    {"run_id", "qubit_id", "t_trigger_index", "t_trigger_seconds",
                                     "peak_value", "cluster_id"},
                                    what);
    std::vector<DetectionRow> rows;
    std::vector<std::string_view> f;
    std::size_t row = 1;
    while (read_line(in, line)) {
        ++row;
        if (line.empty()) continue;
        split_csv(line, f);
        if (f.size() < 6) throw row_error(what, row, "expected 6 fields");
        DetectionRow r;
        if (!parse_number(f[col[0]], r.run_id) || !parse_number(f[col[1]], r.detection.qubit_id) ||
            !parse_number(f[col[2]], r.detection.t_trigger) || !parse_number(f[col[3]], r.t_seconds) ||
            !parse_number(f[col[4]], r.detection.peak_value) || !parse_number(f[col[5]], r.cluster_id))
            throw row_error(what, row, "malformed value");
        rows.push_back(r);
    }
    return rows;
}

inline void write_detections(const std::filesystem::path& path, const std::vector<DetectionRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
    write_detections(out, rows);
}

inline std::vector<DetectionRow> read_detections(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
    return read_detections(in, path.filename().string());
}

} // namespace qimpact::io
