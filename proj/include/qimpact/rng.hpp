// Named random streams derived from a master seed.
#pragma once

#include <cstdint>
#include <random>

namespace qimpact {

using Rng = std::mt19937_64;

enum class StreamPurpose : std::uint32_t {
    impacts = 1,
    initial_charge,
    diffusion,
    jump_sign,
    shots,
    tls_spectra,
    tls_detector,
    tls_scramble,
    tls_walk,
};

inline constexpr std::int64_t kGlobalStream = -1;

/// One independent stream per (qubit, purpose). Adding qubits or purposes never
/// perturbs an existing stream.
inline Rng make_stream(std::uint64_t seed, std::int64_t qubit, StreamPurpose purpose) {
    const auto q = static_cast<std::uint64_t>(qubit);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(q >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Threshold t such that a uniform 32-bit word u gives P(u < t) == p.
inline std::uint64_t bernoulli_threshold32(double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return std::uint64_t{1} << 32;
    return static_cast<std::uint64_t>(p * 4294967296.0);
}

} // namespace qimpact
