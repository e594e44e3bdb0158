#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace lhopt {

/// Dense row-major tensor of doubles. Shape is informational; all optimizer
/// math treats a tensor as a flat vector.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0)
        : shape(std::move(dims)),
          values(std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{}), fill) {}

    std::size_t size() const noexcept { return values.size(); }
    std::span<double> span() noexcept { return values; }
    std::span<const double> span() const noexcept { return values; }

    bool operator==(const Tensor&) const = default;
};

using TensorList = std::vector<Tensor>;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
double global_norm(const TensorList& tensors);
std::size_t total_size(const TensorList& tensors);
bool all_finite(std::span<const double> a);

/// Zero-filled tensors with the same shapes as `like`.
TensorList zeros_like(const TensorList& like);

/// Cosine similarity; returns 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// FNV-1a over the raw bytes of every value. Used for pairing audits.
std::uint64_t hash_tensors(const TensorList& tensors);

} // namespace lhopt
