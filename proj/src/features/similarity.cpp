#include "lhopt/features/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lhopt/common/math.hpp"
#include "lhopt/common/tensor.hpp"

namespace lhopt::features {

CdfCosine cdf_cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw std::invalid_argument("cdf_cosine: dimension mismatch");
    if (u.empty() || l2_norm(u) == 0.0 || l2_norm(v) == 0.0) return {.value = 0.5, .degenerate = true};
    return {.value = cdf_cosine_from(cosine_similarity(u, v), u.size())};
}

double cdf_cosine_from(double cosine, std::size_t d) {
    return normal_cdf(cosine * std::sqrt(static_cast<double>(d)));
}

double logit_cdf_cosine(double cdf_value) {
    constexpr double margin = 1e-9;
    return logit(std::clamp(cdf_value, margin, 1.0 - margin));
}

double estimate_noise_scale(double small_norm_sq, double big_norm_sq, double small_batch, double big_batch) {
    if (!std::isfinite(small_norm_sq) || !std::isfinite(big_norm_sq))
        throw std::invalid_argument("estimate_noise_scale: non-finite gradient norm");
    if (!(small_batch > 0.0 && big_batch > 0.0) || small_batch == big_batch)
        throw std::invalid_argument("estimate_noise_scale: batch sizes must be positive and distinct");
    // Unbiased estimates of |G|^2 and tr(Sigma).
    const double true_grad_sq = (big_batch * big_norm_sq - small_batch * small_norm_sq) / (big_batch - small_batch);
    const double trace = (small_norm_sq - big_norm_sq) / (1.0 / small_batch - 1.0 / big_batch);
    if (!(trace > 0.0)) return noise_scale_floor;
    if (!(true_grad_sq > 0.0)) return noise_scale_ceiling;
    return std::clamp(trace / true_grad_sq, noise_scale_floor, noise_scale_ceiling);
}

} // namespace lhopt::features
