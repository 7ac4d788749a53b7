// JSON encoding of configurations and ground truth.
#pragma once

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qimpact/chip.hpp"
#include "qimpact/error.hpp"
#include "qimpact/io/fields.hpp"

namespace qimpact::io {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void bad_field(const std::string& ctx, const std::string& name,
                                   const std::string& want) {
    throw Error(Errc::schema_error, ctx + ": field '" + name + "' must be " + want);
}

inline json encode(double v) {
    // JSON has no infinity; t2_ef may legitimately be +inf.
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}
inline json encode(bool v) { return v; }
inline json encode(int v) { return v; }
inline json encode(std::size_t v) { return v; }
inline json encode(const TlsLine& t) {
    return {{"freq_offset", t.freq_offset}, {"linewidth", t.linewidth}, {"depth", t.depth}};
}
inline json encode(const TlsWalk& w) { return {{"index", w.index}, {"step", w.step}}; }
template <class T>
json encode(const std::optional<T>& v) {
    return v ? encode(*v) : json(nullptr);
}
template <class T>
json encode(const std::vector<T>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(encode(x));
    return a;
}

inline void decode(const json& j, double& out, const std::string& ctx, const std::string& name) {
    if (j.is_number()) {
        out = j.get<double>();
    } else if (j.is_string() && (j == "inf" || j == "-inf")) {
        out = j == "inf" ? INFINITY : -INFINITY;
    } else {
        bad_field(ctx, name, "a number");
    }
}
inline void decode(const json& j, bool& out, const std::string& ctx, const std::string& name) {
    if (!j.is_boolean()) bad_field(ctx, name, "a boolean");
    out = j.get<bool>();
}
inline void decode(const json& j, int& out, const std::string& ctx, const std::string& name) {
    if (!j.is_number_integer()) bad_field(ctx, name, "an integer");
    out = j.get<int>();
}
inline void decode(const json& j, std::uint64_t& out, const std::string& ctx,
                   const std::string& name) {
    if (!j.is_number_unsigned()) bad_field(ctx, name, "a non-negative integer");
    out = j.get<std::uint64_t>();
}
inline void decode(const json& j, TlsLine& out, const std::string& ctx, const std::string& name) {
    if (!j.is_object()) bad_field(ctx, name, "a list of {freq_offset, linewidth, depth}");
    decode(j.value("freq_offset", json()), out.freq_offset, ctx, name + ".freq_offset");
    decode(j.value("linewidth", json()), out.linewidth, ctx, name + ".linewidth");
    decode(j.value("depth", json()), out.depth, ctx, name + ".depth");
}
inline void decode(const json& j, TlsWalk& out, const std::string& ctx, const std::string& name) {
    if (!j.is_object()) bad_field(ctx, name, "null or {index, step}");
    std::uint64_t idx = 0;
    decode(j.value("index", json()), idx, ctx, name + ".index");
    out.index = static_cast<std::size_t>(idx);
    decode(j.value("step", json()), out.step, ctx, name + ".step");
}
template <class T>
void decode(const json& j, std::optional<T>& out, const std::string& ctx, const std::string& name) {
    if (j.is_null()) {
        out.reset();
        return;
    }
    T v{};
    decode(j, v, ctx, name);
    out = v;
}
template <class T>
void decode(const json& j, std::vector<T>& out, const std::string& ctx, const std::string& name) {
    if (!j.is_array()) bad_field(ctx, name, "an array");
    out.clear();
    for (const auto& e : j) {
        T v{};
        decode(e, v, ctx, name);
        out.push_back(v);
    }
}

} // namespace detail

template <class Cfg>
json config_to_json(const Cfg& cfg) {
    json j = json::object();
    visit_fields(cfg, [&](const char* name, const auto& value) { j[name] = detail::encode(value); });
    return j;
}

/// Missing keys keep their defaults; unknown keys are schema errors.
template <class Cfg>
Cfg config_from_json(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw Error(Errc::schema_error, ctx + " must be an object");
    Cfg cfg;
    std::set<std::string> known;
    visit_fields(cfg, [&](const char* name, auto& value) {
        known.insert(name);
        if (auto it = j.find(name); it != j.end()) detail::decode(*it, value, ctx, name);
    });
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw Error(Errc::schema_error, ctx + ": unknown field '" + key + "'");
    return cfg;
}

inline json impacts_to_json(const std::vector<ImpactEvent>& impacts) {
    json a = json::array();
    for (const auto& e : impacts)
        a.push_back({{"time", e.time},
                     {"x_mm", e.pos.x_mm},
                     {"y_mm", e.pos.y_mm},
                     {"peak_charge", e.peak_charge},
                     {"t1_epicenter", e.t1_epicenter}});
    return a;
}

inline std::vector<ImpactEvent> impacts_from_json(const json& j, const std::string& ctx) {
    if (!j.is_array()) throw Error(Errc::schema_error, ctx + ": impacts must be an array");
    std::vector<ImpactEvent> out;
    for (const auto& e : j) {
        if (!e.is_object()) throw Error(Errc::schema_error, ctx + ": impact must be an object");
        ImpactEvent ev;
        detail::decode(e.value("time", json()), ev.time, ctx, "time");
        detail::decode(e.value("x_mm", json()), ev.pos.x_mm, ctx, "x_mm");
        detail::decode(e.value("y_mm", json()), ev.pos.y_mm, ctx, "y_mm");
        detail::decode(e.value("peak_charge", json()), ev.peak_charge, ctx, "peak_charge");
        detail::decode(e.value("t1_epicenter", json()), ev.t1_epicenter, ctx, "t1_epicenter");
        out.push_back(ev);
    }
    return out;
}

} // namespace qimpact::io
