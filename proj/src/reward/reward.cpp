#include "lhopt/reward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lhopt::reward {

namespace {

// Inversion roundoff at the two anchors is snapped away so that the fitted
// worst and best losses map to exactly 0 and 1.
constexpr double anchor_tolerance = 1e-12;

} // namespace

RewardValue reward_from_loss(const PowerLawFit& fit, const LearningCurve& baseline, double final_loss,
                             const RewardConfig& config) {
    if (baseline.empty()) throw std::invalid_argument("reward_from_loss: empty baseline curve");
    const double u0 = baseline.points.front().progress;
    if (!(u0 < 1.0)) throw std::invalid_argument("reward_from_loss: baseline must start before progress 1");
    if (!std::isfinite(final_loss)) return {.value = config.floor, .floored = true};
    if (final_loss <= fit.c) return {.value = config.ceiling, .capped = true};

    const double equivalent_progress = std::pow((final_loss - fit.c) / fit.a, -1.0 / fit.b);
    if (std::isnan(equivalent_progress)) return {.value = config.floor, .floored = true};
    double r = (equivalent_progress - u0) / (1.0 - u0);
    if (std::abs(r) <= anchor_tolerance) r = 0.0;
    if (std::abs(r - 1.0) <= anchor_tolerance) r = 1.0;
    if (r >= config.ceiling) return {.value = config.ceiling, .capped = true};
    return {.value = std::max(r, config.floor)};
}

void ema_baseline_sync(std::span<const double> current, std::span<double> baseline, double beta) {
    if (current.size() != baseline.size()) throw std::invalid_argument("ema_baseline_sync: size mismatch");
    for (std::size_t i = 0; i < current.size(); ++i) baseline[i] = beta * baseline[i] + (1.0 - beta) * current[i];
}

std::vector<double> shaped_rewards(std::span<const std::optional<double>> intermediate_losses, double final_loss,
                                   const PowerLawFit& fit, const LearningCurve& baseline, const RewardConfig& config) {
    const std::size_t steps = intermediate_losses.size();
    std::vector<double> out(steps, 0.0);
    if (steps == 0) return out;
    double potential = 0.0;
    std::optional<double> best;
    for (std::size_t k = 0; k < steps; ++k) {
        double next = potential;
        if (k + 1 == steps) {
            next = reward_from_loss(fit, baseline, final_loss, config).value;
        } else if (const auto& loss = intermediate_losses[k]; loss && std::isfinite(*loss)) {
            best = best ? std::min(*best, *loss) : *loss;
            next = reward_from_loss(fit, baseline, *best, config).value;
        }
        out[k] = next - potential;
        potential = next;
    }
    return out;
}

} // namespace lhopt::reward
