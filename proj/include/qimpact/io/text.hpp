// Small text helpers shared by the CSV readers and writers.
#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qimpact/error.hpp"

namespace qimpact::io {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void split_csv(std::string_view line, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty();
}

/// getline that drops a trailing carriage return.
inline bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

/// Maps required column names to their positions in a header row.
inline std::vector<std::size_t> header_columns(std::string_view header,
                                               const std::vector<std::string>& required,
                                               const std::string& what) {
    std::vector<std::string_view> cols;
    split_csv(header, cols);
    std::vector<std::size_t> pos;
    for (const auto& name : required) {
        std::size_t found = cols.size();
        for (std::size_t i = 0; i < cols.size(); ++i)
            if (trim(cols[i]) == name) found = i;
        if (found == cols.size())
            throw Error(Errc::parse_error, what + ": missing column '" + name + "'");
        pos.push_back(found);
    }
    return pos;
}

inline Error row_error(const std::string& what, std::size_t row, const std::string& msg) {
    return Error(Errc::parse_error, what + ": row " + std::to_string(row) + ": " + msg);
}

} // namespace qimpact::io
