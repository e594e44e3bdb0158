#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lhopt/features/inner_stats.hpp"
#include "lhopt/features/integral_cdf.hpp"

namespace lhopt::features {

/// Everything that fixes the width and order of the observation vectors.
struct FeatureLayout {
    /// Arity of every action head, in head order (restart head included).
    std::vector<std::size_t> head_arities;
    /// Names of the hyperparameters that have action heads.
    std::vector<std::string> hyper_names;
    std::size_t checkpoint_slots = 3;
    /// Value-function extras.
    std::size_t task_encoding_width = 0;
    std::size_t initial_noise_width = 0;

    std::size_t policy_width() const;
    std::size_t value_width() const;
};

std::vector<std::string> policy_feature_names(const FeatureLayout& layout);
std::vector<std::string> value_feature_names(const FeatureLayout& layout);

/// FNV-1a of the feature names; checkpoints refuse to load across layouts.
std::uint64_t layout_hash(const FeatureLayout& layout);

struct CheckpointInfo {
    double loss_percentile = 0.5;
    double progress = 0.0;
};

/// Inputs observed at one outer step.
struct RunSnapshot {
    double progress = 0.0;
    /// Choice per head from the previous outer step; empty before the first action.
    std::vector<int> previous_action;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    std::vector<std::optional<CheckpointInfo>> checkpoints;
    /// current / initial value per action-controlled hyperparameter.
    std::vector<double> hyper_ratios;
    double param_norm = 0.0;
    double previous_param_norm = 0.0;
    /// Norm of the parameter change since the previous outer step.
    double update_norm = 0.0;
    InnerValues inner{};
};

struct BaselineSummary {
    double min_loss = 0.0;
    double max_loss = 0.0;
    double final_loss = 0.0;
    double fit_a = 0.0;
    double fit_b = 0.0;
    double fit_c = 0.0;
};

struct ValueExtras {
    std::vector<double> task_encoding;
    std::vector<double> initial_noise;
    double reward_so_far = 0.0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    BaselineSummary baseline;
};

/// Builds raw (pre-normalization) observation vectors for one episode. Holds
/// the per-episode integral-CDF streams, so one instance serves one run.
class PolicyFeatureExtractor {
public:
    explicit PolicyFeatureExtractor(FeatureLayout layout);

    const FeatureLayout& layout() const noexcept { return layout_; }

    /// Raw policy features. Every element is finite; NaN inputs become 0 with
    /// their is_nan flag set. Progress must increase between calls.
    std::vector<double> extract(const RunSnapshot& snapshot);

private:
    FeatureLayout layout_;
    IntegralCdf loss_ratio_;
    IntegralCdf train_loss_;
    IntegralCdf valid_loss_;
    IntegralCdf param_norm_ratio_;
    IntegralCdf update_ratio_;
    std::vector<IntegralCdf> inner_;
};

/// Policy features followed by the value-only extras.
std::vector<double> assemble_value_features(const std::vector<double>& policy_raw, const ValueExtras& extras,
                                            const FeatureLayout& layout);

} // namespace lhopt::features
