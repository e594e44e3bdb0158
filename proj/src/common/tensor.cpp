#include "lhopt/common/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>

namespace lhopt {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double global_norm(const TensorList& tensors) {
    double acc = 0.0;
    for (const auto& t : tensors) acc += dot(t.values, t.values);
    return std::sqrt(acc);
}

std::size_t total_size(const TensorList& tensors) {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
}

bool all_finite(std::span<const double> a) {
    for (double v : a)
        if (!std::isfinite(v)) return false;
    return true;
}

TensorList zeros_like(const TensorList& like) {
    TensorList out;
    out.reserve(like.size());
    for (const auto& t : like) out.emplace_back(t.shape, 0.0);
    return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::uint64_t hash_tensors(const TensorList& tensors) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& t : tensors) {
        for (std::size_t d : t.shape) mix(&d, sizeof(d));
        mix(t.values.data(), t.values.size() * sizeof(double));
    }
    return h;
}

} // namespace lhopt
