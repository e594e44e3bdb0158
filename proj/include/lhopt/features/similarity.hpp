#pragma once

#include <cstddef>
#include <span>

namespace lhopt::features {

struct CdfCosine {
    double value = 0.5;
    /// Set when either input had zero norm.
    bool degenerate = false;
};

/// Phi(cos(u, v) * sqrt(d)): uniform on (0, 1) for independent isotropic
/// vectors regardless of d.
CdfCosine cdf_cosine(std::span<const double> u, std::span<const double> v);

/// Same transform from an already computed cosine over d elements.
double cdf_cosine_from(double cosine, std::size_t d);

/// Logit of a CDF cosine value, with the probability kept 1e-9 away from 0 and 1.
double logit_cdf_cosine(double cdf_value);

/// Gradient noise scale B = tr(Sigma) / |G|^2 from squared gradient norms
/// measured at two batch sizes. Throws std::invalid_argument for equal batch
/// sizes or non-finite norms. The result is floored at noise_scale_floor.
double estimate_noise_scale(double small_norm_sq, double big_norm_sq, double small_batch, double big_batch);

inline constexpr double noise_scale_floor = 1e-8;
inline constexpr double noise_scale_ceiling = 1e12;

} // namespace lhopt::features
