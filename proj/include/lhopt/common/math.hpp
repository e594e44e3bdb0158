#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lhopt {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// NaN-free clamp: non-finite input maps to `fallback` before clamping.
inline double safe_clamp(double x, double lo, double hi, double fallback = 0.0) {
    if (std::isnan(x)) return fallback;
    return std::clamp(x, lo, hi);
}

} // namespace lhopt
