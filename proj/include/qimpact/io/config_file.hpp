// `key = value` configuration files (grammar in docs/config.md).
//
//   # comment               blank lines and comments are ignored
//   impact_rate = 0.1        keys mirror the configuration field names
//   tls_list = -14e6:2e6:0.8, 4e6:1.2e6:0.7
//   excluded_qubits = 17
//   monitored_qubit = none
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qimpact/error.hpp"
#include "qimpact/io/fields.hpp"
#include "qimpact/io/text.hpp"

namespace qimpact::io {

struct Settings {
    SimConfig sim;
    TlsConfig tls;
    DetectorParams detector;
    std::string layout;   // empty: bundled 27-qubit layout
    std::size_t n_runs = 1;
};

namespace detail {

[[noreturn]] inline void bad_value(const std::string& key, const std::string& want) {
    throw Error(Errc::parse_error, "config: '" + key + "' expects " + want);
}

inline std::vector<std::string_view> split_list(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    s = trim(s);
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t p = s.find(sep, start);
        out.push_back(trim(s.substr(start, p == std::string_view::npos ? p : p - start)));
        if (p == std::string_view::npos) return out;
        start = p + 1;
    }
}

inline void parse_value(std::string_view s, double& out, const std::string& key) {
    s = trim(s);
    if (s == "inf" || s == "+inf") {
        out = INFINITY;
        return;
    }
    if (!parse_number(s, out)) bad_value(key, "a number");
}

inline void parse_value(std::string_view s, std::size_t& out, const std::string& key) {
    if (parse_number(s, out)) return;
    double d = 0.0;  // accept 1e6-style integers
    if (parse_number(s, d) && d >= 0.0 && d == std::floor(d) && d < 9.007199254740992e15) {
        out = static_cast<std::size_t>(d);
        return;
    }
    bad_value(key, "a non-negative integer");
}

inline void parse_value(std::string_view s, std::string& out, const std::string&) {
    out = std::string(trim(s));
}

inline void parse_value(std::string_view s, int& out, const std::string& key) {
    if (!parse_number(s, out)) bad_value(key, "an integer");
}

inline void parse_value(std::string_view s, bool& out, const std::string& key) {
    s = trim(s);
    if (s == "true" || s == "1") out = true;
    else if (s == "false" || s == "0") out = false;
    else bad_value(key, "true or false");
}

inline void parse_value(std::string_view s, TlsLine& out, const std::string& key) {
    const auto parts = split_list(s, ':');
    if (parts.size() != 3) bad_value(key, "freq:linewidth:depth entries");
    parse_value(parts[0], out.freq_offset, key);
    parse_value(parts[1], out.linewidth, key);
    parse_value(parts[2], out.depth, key);
}

inline void parse_value(std::string_view s, TlsWalk& out, const std::string& key) {
    const auto parts = split_list(s, ':');
    if (parts.size() != 2) bad_value(key, "index:step or none");
    parse_value(parts[0], out.index, key);
    parse_value(parts[1], out.step, key);
}

template <class T>
void parse_value(std::string_view s, std::optional<T>& out, const std::string& key) {
    if (trim(s) == "none" || trim(s).empty()) {
        out.reset();
        return;
    }
    T v{};
    parse_value(s, v, key);
    out = v;
}

template <class T>
void parse_value(std::string_view s, std::vector<T>& out, const std::string& key) {
    out.clear();
    if (trim(s) == "none") return;
    for (auto item : split_list(s, ',')) {
        T v{};
        parse_value(item, v, key);
        out.push_back(v);
    }
}

} // namespace detail

/// Raw key/value pairs; duplicate keys are rejected with both line numbers.
inline std::map<std::string, std::string> parse_config_text(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::map<std::string, std::size_t> line_of;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw Error(Errc::parse_error, "config: line " + std::to_string(row) + " has no '='");
        const std::string key(trim(body.substr(0, eq)));
        if (key.empty())
            throw Error(Errc::parse_error, "config: line " + std::to_string(row) + " has no key");
        if (line_of.count(key))
            throw Error(Errc::parse_error, "config: '" + key + "' set on lines " +
                                               std::to_string(line_of[key]) + " and " +
                                               std::to_string(row));
        line_of[key] = row;
        kv[key] = std::string(trim(body.substr(eq + 1)));
    }
    return kv;
}

/// Applies key/value overrides on top of `base`. Unknown keys are errors.
inline Settings apply_config(Settings base, const std::map<std::string, std::string>& kv) {
    std::map<std::string, bool> used;
    for (const auto& [k, _] : kv) used[k] = false;
    auto visitor = [&](const char* name, auto& field) {
        auto it = kv.find(name);
        if (it == kv.end()) return;
        detail::parse_value(it->second, field, name);
        used[name] = true;
    };
    visit_fields(base.sim, visitor);
    visit_fields(base.tls, visitor);
    visit_fields(base.detector, visitor);
    visitor("layout", base.layout);
    visitor("n_runs", base.n_runs);
    for (const auto& [k, u] : used)
        if (!u) throw Error(Errc::parse_error, "config: unknown key '" + k + "'");
    return base;
}

inline Settings load_config(const std::filesystem::path& path, Settings base = {}) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_failure, "cannot open config " + path.string());
    return apply_config(std::move(base), parse_config_text(in));
}

} // namespace qimpact::io
