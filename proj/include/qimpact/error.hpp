#pragma once

#include <stdexcept>
#include <string>

namespace qimpact {

enum class Errc {
    invalid_argument,
    parse_error,        // malformed text input; message carries the row
    schema_error,       // missing/unknown columns or manifest fields
    version_mismatch,
    truncated_payload,
    length_mismatch,    // manifest and payload disagree on size
    io_failure,
    insufficient_data,
    singular,           // resonant or otherwise undefined numerics
};

inline const char* to_string(Errc e) {
    switch (e) {
        case Errc::invalid_argument: return "invalid_argument";
        case Errc::parse_error: return "parse_error";
        case Errc::schema_error: return "schema_error";
        case Errc::version_mismatch: return "version_mismatch";
        case Errc::truncated_payload: return "truncated_payload";
        case Errc::length_mismatch: return "length_mismatch";
        case Errc::io_failure: return "io_failure";
        case Errc::insufficient_data: return "insufficient_data";
        case Errc::singular: return "singular";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace qimpact
