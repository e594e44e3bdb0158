#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lhopt/reward/power_law.hpp"

namespace lhopt::reward {

struct RewardConfig {
    double floor = -1.0;
    double ceiling = 10.0;
};

struct RewardValue {
    double value = 0.0;
    /// Loss at or below the fitted asymptote.
    bool capped = false;
    /// Non-finite loss.
    bool floored = false;
};

/// Maps a loss to equivalent progress on the baseline's fitted curve:
/// u* = ((loss - c) / a)^(-1/b), r = (u* - u0) / (1 - u0), where u0 is the
/// baseline curve's first progress value. r is 0 at the fitted loss of the
/// first point, 1 at the fitted loss at u = 1, and grows past 1 for losses
/// better than the baseline ever reached.
RewardValue reward_from_loss(const PowerLawFit& fit, const LearningCurve& baseline, double final_loss,
                             const RewardConfig& config = {});

inline constexpr double baseline_ema_beta = 0.99;

/// baseline <- beta * baseline + (1 - beta) * current.
void ema_baseline_sync(std::span<const double> current, std::span<double> baseline, double beta = baseline_ema_beta);

/// Potential-based shaping. Potential after step k is the reward of the best
/// validation loss seen so far; the last step's potential is the terminal
/// reward of `final_loss`, so with gamma = 1 the returned sequence sums to
/// that terminal reward. Missing or non-finite intermediate losses add 0.
std::vector<double> shaped_rewards(std::span<const std::optional<double>> intermediate_losses, double final_loss,
                                   const PowerLawFit& fit, const LearningCurve& baseline,
                                   const RewardConfig& config = {});

} // namespace lhopt::reward
