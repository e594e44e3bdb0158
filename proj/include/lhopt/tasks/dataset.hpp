#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lhopt::tasks {

/// Row-major feature matrix with either class labels or real targets, and a
/// disjoint train/valid split.
struct Dataset {
    std::string name;
    std::size_t input_dim = 0;
    std::vector<double> inputs;
    /// 0 for regression.
    std::size_t num_classes = 0;
    std::vector<int> labels;
    std::size_t target_dim = 0;
    std::vector<double> targets;
    std::vector<std::size_t> train_index;
    std::vector<std::size_t> valid_index;

    std::size_t size() const noexcept { return input_dim == 0 ? 0 : inputs.size() / input_dim; }
    bool is_classification() const noexcept { return num_classes > 0; }
    std::size_t output_dim() const noexcept { return is_classification() ? num_classes : target_dim; }
    std::span<const double> row(std::size_t i) const { return {inputs.data() + i * input_dim, input_dim}; }
};

/// Deterministic shuffled split; valid gets round(n * valid_fraction) rows.
void split_dataset(Dataset& data, double valid_fraction, std::uint64_t seed);

enum class SyntheticKind { gaussian_blobs, linear_regression };

struct SyntheticSpec {
    SyntheticKind kind = SyntheticKind::gaussian_blobs;
    std::size_t samples = 512;
    std::size_t input_dim = 8;
    /// Blobs: number of classes. Regression: target dimension.
    std::size_t outputs = 3;
    /// Blobs: distance between class centres in units of the blob std.
    double separation = 4.0;
    /// Regression: additive target noise std.
    double noise = 0.1;
    double valid_fraction = 0.25;
    std::uint64_t seed = 0;
};

/// Blobs put class centres on orthogonal directions, pairwise `separation`
/// apart with unit-variance noise. Regression draws y = W^T x + noise and
/// stores W (input_dim x outputs, row-major) in `weights_out` when given.
Dataset make_synthetic_dataset(const SyntheticSpec& spec, std::vector<double>* weights_out = nullptr);

} // namespace lhopt::tasks
