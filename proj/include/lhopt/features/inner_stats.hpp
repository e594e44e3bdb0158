#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

#include "lhopt/optim/ciao.hpp"

namespace lhopt::features {

/// Inner-step statistics sampled on a fixed cadence. The unresolved
/// "log scale" statistic has no channel.
enum class InnerChannel : std::size_t {
    fraction_clipped,
    fraction_denom_ge_eps,
    mean_abs_prelr_update,
    log_update_param_ratio,
    log_noise_scale,
    log_trust_ratio,
    cos_grad_momentum,
    logit_cdf_cos_grad_momentum,
    cos_grad_update,
    logit_cdf_cos_grad_update,
    cos_grad_param,
    cdf_cos_grad_param,
};

inline constexpr std::size_t inner_channel_count = 12;
using InnerValues = std::array<double, inner_channel_count>;

std::string_view inner_channel_name(std::size_t channel);

/// Per-step channel values. Channels that cannot be computed on this step
/// (no noise estimate, zero parameter norm, every tensor skipped) are NaN.
InnerValues inner_step_values(const optim::StepStats& stats, std::optional<double> noise_scale);

/// Running means of the inner-step channels between two outer steps.
class InnerStatsAccumulator {
public:
    explicit InnerStatsAccumulator(std::size_t cadence = 4);

    std::size_t cadence() const noexcept { return cadence_; }
    bool should_sample(std::size_t step_index) const noexcept { return step_index % cadence_ == 0; }

    /// Folds in one step; returns false (and does nothing) off-cadence.
    bool accumulate(const optim::StepStats& stats, std::size_t step_index, std::optional<double> noise_scale);
    void add(const InnerValues& values);

    /// Window means; channels with no finite sample are NaN.
    InnerValues means() const;
    std::size_t samples() const noexcept { return samples_; }
    void reset();

private:
    std::size_t cadence_;
    std::size_t samples_ = 0;
    InnerValues sums_{};
    std::array<std::size_t, inner_channel_count> counts_{};
};

} // namespace lhopt::features
