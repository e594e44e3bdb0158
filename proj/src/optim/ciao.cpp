#include "lhopt/optim/ciao.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lhopt::optim {

namespace {

constexpr double trust_guard = 1e-12;

} // namespace

InnerState::InnerState(const TensorList& params) {
    slots.reserve(params.size());
    for (const auto& p : params) slots.emplace_back(p.size());
}

ClipResult clip_gradient(std::span<double> grad, TensorSlotState& slot, const HyperParams& h) {
    const double norm = l2_norm(grad);
    if (!std::isfinite(norm)) {
        std::fill(grad.begin(), grad.end(), 0.0);
        return {.was_clipped = true, .non_finite = true};
    }
    const double beta = 1.0 - h.one_minus_beta_gradclip;
    slot.gradclip_moving_max = std::max(slot.gradclip_moving_max * beta, norm);
    const double threshold = h.grad_clip_fraction * slot.gradclip_moving_max;
    if (norm == 0.0 || norm <= threshold) return {};
    const double scale = threshold / norm;
    for (double& g : grad) g *= scale;
    return {.was_clipped = true};
}

StepStats ciao_step(TensorList& params, const TensorList& grads, const HyperParams& h, InnerState& state) {
    if (params.size() != grads.size() || params.size() != state.slots.size())
        throw std::invalid_argument("ciao_step: params, grads and state disagree on tensor count");

    const double beta1 = 1.0 - h.one_minus_beta1;
    const double beta2 = 1.0 - h.one_minus_beta2;
    const double beta_lamb = 1.0 - h.one_minus_beta_lamb;
    const double lr = h.learning_rate;

    StepStats stats;
    stats.tensors.resize(params.size());
    std::size_t clipped = 0;
    std::size_t counted = 0;
    std::size_t denom_ge_eps = 0;
    double abs_update_sum = 0.0;
    double param_sq = 0.0;
    double delta_sq = 0.0;

    std::vector<double> grad, moment, accum, update;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].values;
        auto& slot = state.slots[i];
        auto& ts = stats.tensors[i];
        const std::size_t n = p.size();
        if (grads[i].size() != n || slot.first_moment.size() != n)
            throw std::invalid_argument("ciao_step: tensor shape mismatch");
        ts.elements = n;
        param_sq += dot(p, p);

        grad = grads[i].values;
        const ClipResult clip = clip_gradient(grad, slot, h);
        ts.clipped = clip.was_clipped;
        if (clip.was_clipped) ++clipped;
        if (clip.non_finite) {
            ts.skipped = true;
            stats.non_finite = true;
            continue;
        }

        ts.cos_grad_momentum = cosine_similarity(grad, slot.first_moment);
        ts.cos_grad_param = cosine_similarity(grad, p);

        const double beta1_power = slot.beta1_power * beta1;
        const double beta2_power = slot.beta2_power * beta2;
        const double m_correction = 1.0 - beta1_power;
        const double v_correction = 1.0 - beta2_power;

        moment.resize(n);
        accum.resize(n);
        update.resize(n);
        std::size_t ge_eps = 0;
        for (std::size_t j = 0; j < n; ++j) {
            moment[j] = beta1 * slot.first_moment[j] + h.one_minus_beta1 * grad[j];
            double denom;
            if (h.denominator_mode == DenominatorMode::adam) {
                accum[j] = beta2 * slot.second_accumulator[j] + h.one_minus_beta2 * grad[j] * grad[j];
                denom = std::sqrt(accum[j] / v_correction);
            } else {
                accum[j] = std::max(beta2 * slot.second_accumulator[j], std::abs(grad[j]));
                denom = accum[j];
            }
            if (denom >= h.epsilon) ++ge_eps;
            const double d = denom + h.epsilon;
            update[j] = d > 0.0 ? (moment[j] / m_correction) / d : 0.0;
        }

        double trust = 1.0;
        double lamb_ema = slot.lamb_update_norm_ema;
        double lamb_power = slot.lamb_beta_power;
        if (h.use_lamb_trust) {
            lamb_ema = beta_lamb * lamb_ema + h.one_minus_beta_lamb * l2_norm(update);
            lamb_power *= beta_lamb;
            const double ema_hat = lamb_ema / (1.0 - lamb_power);
            const double pnorm = l2_norm(p);
            trust = pnorm == 0.0 ? 1.0 : std::max(pnorm / (ema_hat + trust_guard), h.lamb_min_trust);
        }

        if (!all_finite(update) || !std::isfinite(trust)) {
            ts.skipped = true;
            stats.non_finite = true;
            continue;
        }

        ts.cos_grad_update = cosine_similarity(grad, update);
        ts.trust_ratio = trust;

        const double decay = 1.0 - lr * h.weight_decay;
        const double step = lr * trust;
        for (std::size_t j = 0; j < n; ++j) {
            const double before = p[j];
            double v = before * decay;
            v -= step * update[j];
            p[j] = v;
            const double delta = v - before;
            delta_sq += delta * delta;
            abs_update_sum += std::abs(update[j]);
        }

        slot.first_moment.swap(moment);
        slot.second_accumulator.swap(accum);
        slot.beta1_power = beta1_power;
        slot.beta2_power = beta2_power;
        slot.lamb_update_norm_ema = lamb_ema;
        slot.lamb_beta_power = lamb_power;
        ++slot.step_count;
        denom_ge_eps += ge_eps;
        counted += n;
    }

    if (!params.empty()) stats.fraction_clipped = static_cast<double>(clipped) / static_cast<double>(params.size());
    if (counted > 0) {
        stats.fraction_denom_ge_eps = static_cast<double>(denom_ge_eps) / static_cast<double>(counted);
        stats.mean_abs_prelr_update = abs_update_sum / static_cast<double>(counted);
    }
    stats.update_norm = std::sqrt(delta_sq);
    stats.param_norm = std::sqrt(param_sq);
    return stats;
}

} // namespace lhopt::optim
