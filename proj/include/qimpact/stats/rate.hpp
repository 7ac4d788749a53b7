#pragma once

#include <cmath>

#include "qimpact/error.hpp"

namespace qimpact::stats {

/// Impact rate per unit chip area, in events / (s mm^2).
inline double normalized_rate(double tau_jump_s, double chip_area_mm2) {
    if (!(tau_jump_s > 0.0) || !(chip_area_mm2 > 0.0))
        throw Error(Errc::invalid_argument, "time between impacts and chip area must be positive");
    return 1.0 / (tau_jump_s * chip_area_mm2);
}

/// Rounds to `digits` significant figures, half away from zero.
inline double round_significant(double x, int digits) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    const double scale = std::pow(10.0, digits - 1 - static_cast<int>(std::floor(std::log10(std::abs(x)))));
    return std::round(x * scale) / scale;
}

} // namespace qimpact::stats
