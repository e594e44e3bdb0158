#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lhopt/common/tensor.hpp"
#include "lhopt/optim/hyper_params.hpp"

namespace lhopt::optim {

/// Per-tensor accumulators of the customizable inner adaptive optimizer.
struct TensorSlotState {
    std::vector<double> first_moment;
    /// EMA of g^2 (adam) or decayed running max of |g| (adamax).
    std::vector<double> second_accumulator;
    double gradclip_moving_max = 0.0;
    double lamb_update_norm_ema = 0.0;
    std::uint64_t step_count = 0;
    // Running products of the betas actually used, so bias correction stays
    // exact when actions change a beta mid-run.
    double beta1_power = 1.0;
    double beta2_power = 1.0;
    double lamb_beta_power = 1.0;

    explicit TensorSlotState(std::size_t n = 0) : first_moment(n, 0.0), second_accumulator(n, 0.0) {}
    bool operator==(const TensorSlotState&) const = default;
};

struct InnerState {
    std::vector<TensorSlotState> slots;

    InnerState() = default;
    explicit InnerState(const TensorList& params);
    bool operator==(const InnerState&) const = default;
};

struct ClipResult {
    bool was_clipped = false;
    bool non_finite = false;
};

/// Moving-max fractional clipping. Updates `slot.gradclip_moving_max` with the
/// current norm, then rescales `grad` so its norm is at most
/// grad_clip_fraction * G_t. A non-finite norm zeroes the gradient.
ClipResult clip_gradient(std::span<double> grad, TensorSlotState& slot, const HyperParams& h);

struct TensorStepStats {
    std::size_t elements = 0;
    double trust_ratio = 1.0;
    double cos_grad_momentum = 0.0;
    double cos_grad_update = 0.0;
    double cos_grad_param = 0.0;
    bool clipped = false;
    bool skipped = false;
};

struct StepStats {
    double fraction_clipped = 0.0;
    double fraction_denom_ge_eps = 0.0;
    double mean_abs_prelr_update = 0.0;
    /// Norm of the applied parameter change across all tensors.
    double update_norm = 0.0;
    /// Norm of the parameters before the step.
    double param_norm = 0.0;
    std::vector<TensorStepStats> tensors;
    bool non_finite = false;
};

/// One inner step. `grads` is consumed (clipped in place on a copy).
/// Tensors whose update is non-finite are left untouched and flagged.
StepStats ciao_step(TensorList& params, const TensorList& grads, const HyperParams& h, InnerState& state);

} // namespace lhopt::optim
