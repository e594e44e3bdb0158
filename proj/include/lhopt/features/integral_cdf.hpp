#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace lhopt::features {

inline constexpr std::array<double, 5> default_cdf_bases = {1.25, 2.5, 5.0, 10.0, 20.0};

/// Mean and variance of a stream observed at increasing progress values,
/// where consecutive observations are joined by straight lines and each
/// instant t carries weight b^t. Statistics are kept as closed-form
/// integrals per base, so they do not depend on how often the stream is
/// sampled.
class IntegralCdf {
public:
    explicit IntegralCdf(std::vector<double> bases = {default_cdf_bases.begin(), default_cdf_bases.end()});

    /// Extends the stream. Throws std::invalid_argument unless t is in
    /// [0, 1] and strictly after the previous observation. Non-finite y is
    /// dropped and reported by returning false.
    bool observe(double y, double t);

    std::size_t base_count() const noexcept { return bases_.size(); }
    double base(std::size_t k) const { return bases_.at(k); }
    std::size_t count() const noexcept { return count_; }
    double last_progress() const noexcept { return t_prev_; }

    double weight_mass(std::size_t k) const;
    double mean(std::size_t k) const;
    double variance(std::size_t k) const;

    /// Gaussian CDF of y's z-score under base k. An empty stream gives 0.5;
    /// a degenerate (zero-variance) stream gives 0, 0.5 or 1 by comparison.
    double cdf(std::size_t k, double y) const;
    std::vector<double> cdf_all(double y) const;

    /// Ranks y against the history so far, then appends it. This is the
    /// feature-producing path: the first value of a stream is 0.5 and the
    /// second is 0 or 1.
    std::vector<double> rank_then_observe(double y, double t);

private:
    struct Accumulator {
        double mass = 0.0;
        double sum = 0.0;
        double sum_sq = 0.0;
    };

    std::vector<double> bases_;
    std::vector<Accumulator> acc_;
    double y_ref_ = 0.0;
    double y_prev_ = 0.0;
    double t_prev_ = 0.0;
    std::size_t count_ = 0;
};

/// I_j(c) = integral over [0, 1] of s^j e^{c s} ds for j = 0, 1, 2, by power
/// series (stable for the small c produced by short segments).
std::array<double, 3> exp_moment_integrals(double c);

} // namespace lhopt::features
