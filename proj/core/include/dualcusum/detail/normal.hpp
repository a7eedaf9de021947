#pragma once

#include <cmath>
#include <numbers>

namespace dualcusum::detail {

inline double normal_pdf(double u) {
    return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

inline double normal_sf(double u) { return 0.5 * std::erfc(u / std::numbers::sqrt2); }

}  // namespace dualcusum::detail
