// Run records on disk: a JSON manifest plus a shot payload, either CSV
// `rep_index,qubit_id,m0,m1` or the packed QRL1 binary (docs/qrl1_format.md).
#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qimpact/bits.hpp"
#include "qimpact/error.hpp"
#include "qimpact/io/json_codec.hpp"
#include "qimpact/io/manifest.hpp"
#include "qimpact/io/text.hpp"
#include "qimpact/simulator.hpp"

namespace qimpact::io {

enum class Encoding { csv, qrl1 };

struct WriteOptions {
    Encoding encoding = Encoding::csv;
    std::optional<std::string> created_at;  // omitted by default so output is reproducible
};

// ---------------------------------------------------------------------------
// CSV shots

inline void write_shots_csv(std::ostream& out, const RunRecord& rec) {
    out << "rep_index,qubit_id,m0,m1\n";
    const std::size_t n = rec.n_reps();
    std::string line;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t q = 0; q < rec.qubit_ids.size(); ++q) {
            line.clear();
            line += std::to_string(r);
            line += ',';
            line += std::to_string(rec.qubit_ids[q]);
            line += rec.m0[q][r] ? ",1" : ",0";
            line += rec.m1[q][r] ? ",1\n" : ",0\n";
            out << line;
        }
    }
}

/// Streams a shot CSV into packed bits. Rows may come in any order but every
/// (rep, qubit) pair must appear exactly once. Only the packed output grows
/// with the file; text is consumed one line at a time.
inline void read_shots_csv(std::istream& in, const std::vector<QubitId>& qubit_ids,
                           std::size_t n_reps, std::vector<BitVector>& m0,
                           std::vector<BitVector>& m1, const std::string& what = "shots") {
    std::string line;
    if (!read_line(in, line)) throw Error(Errc::parse_error, what + ": empty file");
    const auto col = header_columns(line, {"rep_index", "qubit_id", "m0", "m1"}, what);
    std::unordered_map<QubitId, std::size_t> index;
    for (std::size_t i = 0; i < qubit_ids.size(); ++i) index.emplace(qubit_ids[i], i);
    m0.assign(qubit_ids.size(), BitVector(n_reps));
    m1.assign(qubit_ids.size(), BitVector(n_reps));
    std::vector<BitVector> seen(qubit_ids.size(), BitVector(n_reps));
    std::vector<std::string_view> f;
    std::size_t row = 1, filled = 0;
    while (read_line(in, line)) {
        ++row;
        if (line.empty()) continue;
        split_csv(line, f);
        if (f.size() < 4) throw row_error(what, row, "expected 4 fields");
        std::uint64_t rep = 0;
        QubitId qid = 0;
        if (!parse_number(f[col[0]], rep)) throw row_error(what, row, "rep_index is not an integer");
        if (!parse_number(f[col[1]], qid)) throw row_error(what, row, "qubit_id is not an integer");
        const auto bit = [&](std::size_t c, const char* name) {
            const auto v = trim(f[c]);
            if (v == "0") return false;
            if (v == "1") return true;
            throw row_error(what, row, std::string(name) + " must be 0 or 1");
        };
        const bool b0 = bit(col[2], "m0");
        const bool b1 = bit(col[3], "m1");
        auto it = index.find(qid);
        if (it == index.end())
            throw row_error(what, row, "qubit_id " + std::to_string(qid) + " not in manifest");
        if (rep >= n_reps)
            throw Error(Errc::length_mismatch, what + ": row " + std::to_string(row) +
                                                   " rep_index beyond manifest n_reps");
        const std::size_t q = it->second;
        if (seen[q][rep]) throw row_error(what, row, "duplicate (rep_index, qubit_id)");
        seen[q].set(rep, true);
        m0[q].set(rep, b0);
        m1[q].set(rep, b1);
        ++filled;
    }
    if (filled != n_reps * qubit_ids.size())
        throw Error(Errc::length_mismatch,
                    what + ": " + std::to_string(filled) + " shot rows, manifest implies " +
                        std::to_string(n_reps * qubit_ids.size()));
}

// ---------------------------------------------------------------------------
// QRL1 binary

inline constexpr std::array<char, 4> kQrlMagic{'Q', 'R', 'L', '1'};
inline constexpr std::uint32_t kQrlVersion = 1;

namespace detail {

template <class T>
void put_le(std::ostream& out, T v) {
    unsigned char b[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& in, const std::string& what) {
    unsigned char b[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(b), sizeof(T)))
        throw Error(Errc::truncated_payload, what + ": header truncated");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
    return v;
}

} // namespace detail

inline void write_shots_qrl1(std::ostream& out, const RunRecord& rec) {
    const std::size_t nq = rec.qubit_ids.size();
    const std::size_t n = rec.n_reps();
    out.write(kQrlMagic.data(), 4);
    detail::put_le<std::uint32_t>(out, kQrlVersion);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(nq));
    detail::put_le<std::uint64_t>(out, n);
    for (QubitId id : rec.qubit_ids) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(id));
    std::vector<unsigned char> buf;
    buf.reserve(1 << 16);
    unsigned char acc = 0;
    unsigned used = 0;
    auto push = [&](bool b) {
        acc |= static_cast<unsigned char>(b) << used;
        if (++used == 8) {
            buf.push_back(acc);
            acc = 0;
            used = 0;
            if (buf.size() == buf.capacity()) {
                out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
                buf.clear();
            }
        }
    };
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t q = 0; q < nq; ++q) {
            push(rec.m0[q][r]);
            push(rec.m1[q][r]);
        }
    if (used) buf.push_back(acc);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline void read_shots_qrl1(std::istream& in, const std::vector<QubitId>& qubit_ids,
                            std::size_t n_reps, std::vector<BitVector>& m0,
                            std::vector<BitVector>& m1, const std::string& what = "shots") {
    char magic[4];
    if (!in.read(magic, 4)) throw Error(Errc::truncated_payload, what + ": header truncated");
    if (std::memcmp(magic, kQrlMagic.data(), 4) != 0)
        throw Error(Errc::parse_error, what + ": not a QRL1 file");
    const auto version = detail::get_le<std::uint32_t>(in, what);
    if (version != kQrlVersion)
        throw Error(Errc::version_mismatch,
                    what + ": unsupported QRL1 version " + std::to_string(version));
    const auto nq = detail::get_le<std::uint32_t>(in, what);
    const auto n = detail::get_le<std::uint64_t>(in, what);
    if (nq != qubit_ids.size() || n != n_reps)
        throw Error(Errc::length_mismatch, what + ": payload shape disagrees with manifest");
    for (std::size_t q = 0; q < nq; ++q) {
        const auto id = static_cast<QubitId>(detail::get_le<std::uint32_t>(in, what));
        if (id != qubit_ids[q])
            throw Error(Errc::length_mismatch, what + ": qubit ids disagree with manifest");
    }
    m0.assign(nq, BitVector(n_reps));
    m1.assign(nq, BitVector(n_reps));
    const std::size_t n_bits = 2 * nq * n_reps;
    const std::size_t n_bytes = (n_bits + 7) / 8;
    std::vector<unsigned char> buf(1 << 16);
    std::size_t bit = 0;
    for (std::size_t done = 0; done < n_bytes;) {
        const std::size_t want = std::min(buf.size(), n_bytes - done);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(want));
        if (static_cast<std::size_t>(in.gcount()) != want)
            throw Error(Errc::truncated_payload, what + ": shot payload truncated");
        for (std::size_t k = 0; k < want; ++k)
            for (unsigned j = 0; j < 8 && bit < n_bits; ++j, ++bit) {
                if (!((buf[k] >> j) & 1u)) continue;
                const std::size_t cell = bit >> 1;
                const std::size_t r = cell / nq, q = cell % nq;
                (bit & 1 ? m1 : m0)[q].set(r, true);
            }
        done += want;
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw Error(Errc::length_mismatch, what + ": trailing bytes after shot payload");
}

// ---------------------------------------------------------------------------
// Whole records

inline json run_manifest(const RunRecord& rec, Encoding enc, const std::string& shots_file,
                         const std::optional<std::string>& created_at = std::nullopt) {
    json m;
    m["format_version"] = kFormatVersion;
    m["created_at"] = created_at ? json(*created_at) : json(nullptr);
    m["mode"] = to_string(rec.mode);
    m["layout_path"] = rec.layout_path;
    m["seed"] = rec.seed;
    m["n_reps"] = rec.n_reps();
    m["qubit_ids"] = rec.qubit_ids;
    m["config"] = config_to_json(rec.config);
    m["payload"] = {{"encoding", enc == Encoding::csv ? "csv" : "qrl1"}, {"shots", shots_file}};
    if (rec.ground_truth)
        m["ground_truth"] = {{"impacts", impacts_to_json(*rec.ground_truth)}};
    else
        m["ground_truth"] = nullptr;
    return m;
}

/// Writes `<manifest>` and its payload `<stem>.csv` / `<stem>.qrl` beside it.
inline void write_run(const RunRecord& rec, const std::filesystem::path& manifest_path,
                      const WriteOptions& opt = {}) {
    for (std::size_t q = 0; q < rec.qubit_ids.size(); ++q)
        if (rec.m0[q].size() != rec.n_reps() || rec.m1[q].size() != rec.n_reps())
            throw Error(Errc::invalid_argument, "record streams have unequal lengths");
    const std::string shots =
        manifest_path.stem().string() + (opt.encoding == Encoding::csv ? ".csv" : ".qrl");
    {
        std::ofstream out(payload_path(manifest_path, shots), std::ios::binary);
        if (!out) throw Error(Errc::io_failure, "cannot write " + shots);
        if (opt.encoding == Encoding::csv)
            write_shots_csv(out, rec);
        else
            write_shots_qrl1(out, rec);
        if (!out) throw Error(Errc::io_failure, "write failed for " + shots);
    }
    write_json(manifest_path, run_manifest(rec, opt.encoding, shots, opt.created_at));
}

namespace detail {

inline RunRecord record_from_manifest(const json& m, const std::string& ctx) {
    RunRecord rec;
    rec.mode = parse_mode(m["mode"].get<std::string>());
    const json& cfg = m["config"];
    rec.config = config_from_json<SimConfig>(cfg, ctx + ": config");
    const auto n_reps = m["n_reps"].get<std::size_t>();
    if (!cfg.contains("n_reps")) rec.config.n_reps = n_reps;
    if (!cfg.contains("run_duration"))
        rec.config.run_duration = static_cast<double>(rec.config.n_reps) * rec.config.rep_period;
    if (rec.config.n_reps != n_reps)
        throw Error(Errc::length_mismatch, ctx + ": config.n_reps disagrees with n_reps");
    rec.layout_path = m.value("layout_path", std::string{});
    rec.seed = m.value("seed", std::uint64_t{0});
    for (const auto& q : m["qubit_ids"]) {
        if (!q.is_number_integer()) throw Error(Errc::schema_error, ctx + ": qubit_ids must be integers");
        rec.qubit_ids.push_back(q.get<QubitId>());
    }
    if (m.contains("ground_truth") && m["ground_truth"].is_object()) {
        const json& gt = m["ground_truth"];
        if (!gt.contains("impacts"))
            throw Error(Errc::schema_error, ctx + ": ground_truth.impacts missing");
        rec.ground_truth = impacts_from_json(gt["impacts"], ctx);
    }
    return rec;
}

inline void read_payload(RunRecord& rec, const std::filesystem::path& file, bool binary,
                         std::size_t n_reps) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error(Errc::io_failure, "cannot open payload " + file.string());
    if (binary)
        read_shots_qrl1(in, rec.qubit_ids, n_reps, rec.m0, rec.m1, file.filename().string());
    else
        read_shots_csv(in, rec.qubit_ids, n_reps, rec.m0, rec.m1, file.filename().string());
}

} // namespace detail

inline RunRecord read_run(const std::filesystem::path& manifest_path) {
    const json m = read_manifest(manifest_path);
    if (m["mode"] == "tls_interleaved")
        throw Error(Errc::schema_error, manifest_path.string() + " holds a spectrum series");
    RunRecord rec = detail::record_from_manifest(m, manifest_path.filename().string());
    const auto& p = m["payload"];
    detail::read_payload(rec, payload_path(manifest_path, p["shots"].get<std::string>()),
                         p["encoding"] == "qrl1", m["n_reps"].get<std::size_t>());
    return rec;
}

/// Loads laboratory shots exported as CSV. The manifest supplies the qubit
/// list, repetition count and timing; the record never carries ground truth.
inline RunRecord ingest_external(const std::filesystem::path& csv_path,
                                 const std::filesystem::path& manifest_path) {
    json m;
    {
        std::ifstream in(manifest_path);
        if (!in) throw Error(Errc::io_failure, "cannot open manifest " + manifest_path.string());
        try {
            m = json::parse(in);
        } catch (const json::parse_error& e) {
            throw Error(Errc::parse_error, "manifest " + manifest_path.string() + ": " + e.what());
        }
    }
    if (m.is_object()) {
        m["mode"] = "external";
        m.erase("ground_truth");
        if (!m.contains("payload"))
            m["payload"] = {{"encoding", "csv"}, {"shots", csv_path.filename().string()}};
    }
    validate_manifest(m);
    RunRecord rec = detail::record_from_manifest(m, manifest_path.filename().string());
    rec.ground_truth.reset();
    detail::read_payload(rec, csv_path, false, m["n_reps"].get<std::size_t>());
    return rec;
}

} // namespace qimpact::io
