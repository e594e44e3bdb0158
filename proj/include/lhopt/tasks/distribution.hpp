#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "lhopt/tasks/dataset.hpp"
#include "lhopt/tasks/mlp.hpp"
#include "lhopt/tasks/nqm.hpp"

namespace lhopt::tasks {

/// A dataset available to the MLP family: either synthetic or a pair of IDX files.
struct DatasetSource {
    std::string name;
    bool synthetic = true;
    SyntheticSpec spec;
    std::filesystem::path images;
    std::filesystem::path labels;
    std::size_t max_samples = 2048;
    double valid_fraction = 0.2;
};

struct MlpRanges {
    int depth_min = 1;
    int depth_max = 2;
    std::vector<std::size_t> widths = {16, 32, 64};
    std::vector<std::size_t> batch_sizes = {16, 32, 64};
    std::vector<Activation> activations = {std::begin(all_activations), std::end(all_activations)};
    std::vector<Normalization> normalizations = {std::begin(all_normalizations), std::end(all_normalizations)};
    std::vector<LossKind> losses = {std::begin(all_losses), std::end(all_losses)};
    std::vector<DatasetSource> datasets;
};

/// Episode lengths: outer steps, and inner steps per outer step.
struct EpisodeRanges {
    int outer_min = 8;
    int outer_max = 16;
    int inner_min = 16;
    int inner_max = 32;
};

struct DistributionConfig {
    double nqm_weight = 0.0;
    double mlp_weight = 0.0;
    NqmRanges nqm;
    MlpRanges mlp;
    EpisodeRanges episode;
};

/// NQM-only distribution with default ranges.
DistributionConfig nqm_only_config();
/// Built-in synthetic datasets (blobs classification, linear regression).
std::vector<DatasetSource> builtin_datasets();

/// Every categorical choice made when drawing a task.
struct TaskChoices {
    TaskFamily family = TaskFamily::nqm;
    int nqm_dim = 0;
    double nqm_kappa = 0.0;
    std::size_t dataset = 0;
    std::vector<std::size_t> hidden;
    Activation activation = Activation::relu;
    Normalization normalization = Normalization::none;
    LossKind loss = LossKind::cce;
    std::size_t batch_size = 0;
    int outer_steps = 0;
    int inner_per_outer = 0;
};

struct SampledTask {
    std::shared_ptr<const InnerTask> task;
    TaskChoices choices;
    std::vector<double> encoding;
    std::uint64_t seed = 0;

    int outer_steps() const noexcept { return choices.outer_steps; }
    int inner_per_outer() const noexcept { return choices.inner_per_outer; }
    std::size_t total_inner_steps() const noexcept {
        return static_cast<std::size_t>(choices.outer_steps) * static_cast<std::size_t>(choices.inner_per_outer);
    }
};

/// Owns the datasets and draws reproducible tasks. The encoding is a
/// one-hot per categorical choice and scaled values for numeric ones, with
/// the other family's block left at zero.
class TaskDistribution {
public:
    explicit TaskDistribution(DistributionConfig config);

    SampledTask sample(std::uint64_t seed) const;
    /// Builds the task for explicit choices (the inverse of sampling).
    SampledTask build(const TaskChoices& choices, std::uint64_t seed) const;

    std::vector<double> encode(const TaskChoices& choices) const;
    std::size_t encoding_width() const;
    const DistributionConfig& config() const noexcept { return config_; }
    const std::vector<std::shared_ptr<const Dataset>>& datasets() const noexcept { return datasets_; }

private:
    DistributionConfig config_;
    std::vector<std::shared_ptr<const Dataset>> datasets_;
};

} // namespace lhopt::tasks
