#pragma once

#include <vector>

namespace lhopt::reward {

struct CurvePoint {
    double progress; // u in (0, 1]
    double loss;
};

/// Validation losses against training progress. Progress strictly increases.
struct LearningCurve {
    std::vector<CurvePoint> points;

    /// Throws std::invalid_argument on non-increasing or out-of-range progress.
    void validate() const;
    bool empty() const noexcept { return points.empty(); }
};

/// l(u) = c + a * u^(-b), fitted on [u_min, 1].
struct PowerLawFit {
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;
    double u_min = 0.0;
    double sse = 0.0;
    /// No asymptote candidate produced a decreasing curve.
    bool low_quality = false;

    double predict(double u) const;
};

inline constexpr int asymptote_candidates = 64;
inline constexpr double degenerate_exponent = 1e-6;

/// Least-squares power law. The asymptote c is searched over 64 log-spaced
/// candidates below the minimum loss (then refined by a bounded 1-D search);
/// for each c, (a, b) come from linear regression of log(l - c) on log u.
/// The result is then polished by exact least squares in loss space: (a, c)
/// solved linearly for each exponent b, with b searched in one dimension.
/// Throws std::invalid_argument for fewer than 3 points or non-finite losses.
PowerLawFit fit_power_law(const LearningCurve& curve);

} // namespace lhopt::reward
