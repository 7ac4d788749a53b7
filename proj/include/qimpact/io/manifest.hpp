// Versioned JSON manifests that accompany every payload file.
//
// The schema is shipped as docs/manifest.schema.json; `validate_manifest`
// enforces the same rules without a schema engine.
#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "qimpact/error.hpp"
#include "qimpact/io/json_codec.hpp"
#include "qimpact/simulator.hpp"

namespace qimpact::io {

inline constexpr const char* kFormatVersion = "1.0";

inline RecordMode parse_mode(const std::string& s) {
    if (s == "jump_detector") return RecordMode::jump_detector;
    if (s == "tls_interleaved") return RecordMode::tls_interleaved;
    if (s == "external") return RecordMode::external;
    throw Error(Errc::schema_error, "manifest: unknown mode '" + s + "'");
}

namespace detail {

inline void require(const json& j, const char* key, bool ok, const char* want) {
    if (!j.contains(key))
        throw Error(Errc::schema_error, std::string("manifest: missing field '") + key + "'");
    if (!ok)
        throw Error(Errc::schema_error,
                    std::string("manifest: field '") + key + "' must be " + want);
}

} // namespace detail

/// Checks version, required fields and that the payload section matches the mode.
inline void validate_manifest(const json& m) {
    if (!m.is_object()) throw Error(Errc::schema_error, "manifest: top level must be an object");
    detail::require(m, "format_version", m.contains("format_version") && m["format_version"].is_string(),
                    "a string");
    if (m["format_version"] != kFormatVersion)
        throw Error(Errc::version_mismatch, "manifest: unsupported format_version '" +
                                                m["format_version"].get<std::string>() + "'");
    detail::require(m, "mode", m.contains("mode") && m["mode"].is_string(), "a string");
    const RecordMode mode = parse_mode(m["mode"].get<std::string>());
    detail::require(m, "config", m.contains("config") && m["config"].is_object(), "an object");
    detail::require(m, "payload", m.contains("payload") && m["payload"].is_object(), "an object");
    const json& p = m["payload"];
    if (!p.contains("encoding") || !p["encoding"].is_string())
        throw Error(Errc::schema_error, "manifest: payload.encoding must be a string");
    if (m.contains("seed") && !m["seed"].is_number_unsigned())
        throw Error(Errc::schema_error, "manifest: field 'seed' must be a non-negative integer");
    if (m.contains("layout_path") && !m["layout_path"].is_string())
        throw Error(Errc::schema_error, "manifest: field 'layout_path' must be a string");
    if (m.contains("created_at") && !(m["created_at"].is_string() || m["created_at"].is_null()))
        throw Error(Errc::schema_error, "manifest: field 'created_at' must be a string or null");
    if (mode == RecordMode::tls_interleaved) {
        detail::require(m, "tls_config", m.contains("tls_config") && m["tls_config"].is_object(),
                        "an object");
        if (!p.contains("spectra") || !p["spectra"].is_string() || !p.contains("detectors") ||
            !p["detectors"].is_object())
            throw Error(Errc::schema_error,
                        "manifest: TLS mode needs payload.spectra and payload.detectors");
        if (p["encoding"] != "csv")
            throw Error(Errc::schema_error, "manifest: TLS payloads are CSV only");
    } else {
        detail::require(m, "qubit_ids", m.contains("qubit_ids") && m["qubit_ids"].is_array(),
                        "an array");
        detail::require(m, "n_reps", m.contains("n_reps") && m["n_reps"].is_number_unsigned(),
                        "a non-negative integer");
        if (!p.contains("shots") || !p["shots"].is_string())
            throw Error(Errc::schema_error, "manifest: payload.shots must name the shot file");
        if (p["encoding"] != "csv" && p["encoding"] != "qrl1")
            throw Error(Errc::schema_error, "manifest: payload.encoding must be csv or qrl1");
    }
    if (mode == RecordMode::external && m.contains("ground_truth") && !m["ground_truth"].is_null())
        throw Error(Errc::schema_error, "manifest: external records carry no ground truth");
    if (m.contains("ground_truth") && !m["ground_truth"].is_null() && !m["ground_truth"].is_object())
        throw Error(Errc::schema_error, "manifest: ground_truth must be an object or null");
}

inline json read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_failure, "cannot open manifest " + path.string());
    json m;
    try {
        m = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(Errc::parse_error, "manifest " + path.string() + ": " + e.what());
    }
    validate_manifest(m);
    return m;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io_failure, "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error(Errc::io_failure, "write failed for " + path.string());
}

/// Payload files live next to their manifest; stored names are relative.
inline std::filesystem::path payload_path(const std::filesystem::path& manifest,
                                          const std::string& name) {
    return manifest.parent_path() / name;
}

} // namespace qimpact::io
