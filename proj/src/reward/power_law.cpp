#include "lhopt/reward/power_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>

namespace lhopt::reward {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

struct Candidate {
    double a = 1.0;
    double b = 0.0;
    double c = 0.0;
    double sse = inf;
};

/// (a, b) by regression in log-log space for a fixed asymptote; sse in loss space.
Candidate profile(const LearningCurve& curve, double c) {
    const auto& pts = curve.points;
    const double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        const double gap = p.loss - c;
        if (!(gap > 0.0)) return {};
        const double x = std::log(p.progress);
        const double y = std::log(gap);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double var_x = sxx - sx * sx / n;
    if (!(var_x > 0.0)) return {};
    const double slope = (sxy - sx * sy / n) / var_x;
    const double intercept = (sy - slope * sx) / n;
    Candidate out{.a = std::exp(intercept), .b = -slope, .c = c};
    if (!(out.b > degenerate_exponent)) return {};
    double sse = 0.0;
    for (const auto& p : pts) {
        const double r = p.loss - (out.c + out.a * std::pow(p.progress, -out.b));
        sse += r * r;
    }
    out.sse = std::isfinite(sse) ? sse : inf;
    return out;
}

/// Exact least squares in (a, c) for a fixed exponent; c is kept below the
/// smallest loss and a positive.
Candidate linear_in_b(const LearningCurve& curve, double b, double c_max) {
    const auto& pts = curve.points;
    const double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        const double x = std::pow(p.progress, -b);
        sx += x;
        sy += p.loss;
        sxx += x * x;
        sxy += x * p.loss;
    }
    const double var_x = sxx - sx * sx / n;
    if (!(var_x > 0.0)) return {};
    Candidate out{.a = (sxy - sx * sy / n) / var_x, .b = b};
    out.c = (sy - out.a * sx) / n;
    if (!(out.a > 0.0) || !(out.c < c_max)) return {};
    double sse = 0.0;
    for (const auto& p : pts) {
        const double r = p.loss - (out.c + out.a * std::pow(p.progress, -b));
        sse += r * r;
    }
    out.sse = std::isfinite(sse) ? sse : inf;
    return out;
}

} // namespace

void LearningCurve::validate() const {
    double prev = 0.0;
    for (const auto& p : points) {
        if (!(p.progress > prev && p.progress <= 1.0))
            throw std::invalid_argument("LearningCurve: progress must strictly increase within (0, 1]");
        prev = p.progress;
    }
}

double PowerLawFit::predict(double u) const { return c + a * std::pow(u, -b); }

PowerLawFit fit_power_law(const LearningCurve& curve) {
    if (curve.points.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points");
    curve.validate();
    double lo = inf, hi = -inf;
    for (const auto& p : curve.points) {
        if (!std::isfinite(p.loss)) throw std::invalid_argument("fit_power_law: non-finite loss");
        lo = std::min(lo, p.loss);
        hi = std::max(hi, p.loss);
    }

    // Candidates c = lo - span * q, q log-spaced on [1e-4, 1]. With a
    // positive minimum this covers [0, lo).
    const double span = lo > 0.0 ? lo : std::max(hi - lo, 1e-12);
    auto candidate_c = [&](int k) {
        const double q = std::pow(10.0, -4.0 + 4.0 * k / (asymptote_candidates - 1));
        return lo - span * q;
    };

    int best_k = -1;
    Candidate best;
    for (int k = 0; k < asymptote_candidates; ++k) {
        const Candidate cand = profile(curve, candidate_c(k));
        if (cand.sse < best.sse) {
            best = cand;
            best_k = k;
        }
    }

    PowerLawFit fit;
    fit.u_min = curve.points.front().progress;
    if (best_k < 0) {
        // Nothing decreasing; report a near-flat curve through the geometric mean.
        double log_sum = 0.0;
        bool positive = lo > 0.0;
        for (const auto& p : curve.points) log_sum += positive ? std::log(p.loss) : 0.0;
        fit.a = positive ? std::exp(log_sum / static_cast<double>(curve.points.size())) : 1.0;
        fit.b = degenerate_exponent;
        fit.c = positive ? 0.0 : lo - 1.0;
        fit.low_quality = true;
        double sse = 0.0;
        for (const auto& p : curve.points) sse += std::pow(p.loss - fit.predict(p.progress), 2);
        fit.sse = sse;
        return fit;
    }

    // Refine c between the neighbouring candidates. Candidate c decreases with k.
    const double c_hi = best_k > 0 ? candidate_c(best_k - 1) : lo - span * 1e-8;
    const double c_lo = best_k + 1 < asymptote_candidates ? candidate_c(best_k + 1) : candidate_c(best_k);
    if (c_hi > c_lo) {
        auto objective = [&](double c) { return profile(curve, c).sse; };
        const auto [c_opt, sse_opt] = boost::math::tools::brent_find_minima(objective, c_lo, c_hi, 40);
        if (sse_opt < best.sse) best = profile(curve, c_opt);
    }

    // Polish in loss space: for each exponent (a, c) are linear.
    {
        auto objective = [&](double b) { return linear_in_b(curve, b, lo).sse; };
        const auto [b_opt, sse_opt] =
            boost::math::tools::brent_find_minima(objective, best.b * 0.25, best.b * 4.0, 50);
        if (sse_opt < best.sse) best = linear_in_b(curve, b_opt, lo);
    }

    fit.a = best.a;
    fit.b = best.b;
    fit.c = best.c;
    fit.sse = best.sse;
    return fit;
}

} // namespace lhopt::reward
