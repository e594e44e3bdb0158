#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lhopt/common/rng.hpp"
#include "lhopt/features/assembler.hpp"
#include "lhopt/features/normalizer.hpp"
#include "lhopt/policy/lstm.hpp"

namespace lhopt::policy {

/// One categorical distribution per action head.
using HeadDistributions = std::vector<std::vector<double>>;

/// Splits concatenated logits by head arity and applies a stable softmax.
HeadDistributions head_softmax(std::span<const double> logits, std::span<const std::size_t> arities);
std::vector<int> sample_actions(const HeadDistributions& dists, Rng& rng);
std::vector<int> greedy_actions(const HeadDistributions& dists);
/// Sum over heads of log p(choice).
double joint_log_prob(const HeadDistributions& dists, std::span<const int> actions);
double joint_entropy(const HeadDistributions& dists);

/// Policy and value LSTMs with the same architecture, each reading its own
/// observation vector through a persistent normalizer bank. Inputs to the
/// step functions are already normalized.
class Controller {
public:
    Controller() = default;
    Controller(features::FeatureLayout layout, std::size_t hidden, std::uint64_t seed);
    Controller(features::FeatureLayout layout, LstmNetwork policy, LstmNetwork value);

    const features::FeatureLayout& layout() const noexcept { return layout_; }
    std::size_t hidden() const noexcept { return policy_.shape().hidden; }

    LstmNetwork& policy_net() noexcept { return policy_; }
    const LstmNetwork& policy_net() const noexcept { return policy_; }
    LstmNetwork& value_net() noexcept { return value_; }
    const LstmNetwork& value_net() const noexcept { return value_; }
    features::NormalizerBank& policy_normalizer() noexcept { return policy_norm_; }
    const features::NormalizerBank& policy_normalizer() const noexcept { return policy_norm_; }
    features::NormalizerBank& value_normalizer() noexcept { return value_norm_; }
    const features::NormalizerBank& value_normalizer() const noexcept { return value_norm_; }

    LstmState initial_policy_state() const { return policy_.initial_state(); }
    LstmState initial_value_state() const { return value_.initial_state(); }

    /// Throws std::invalid_argument on a wrong-width or non-finite input.
    HeadDistributions policy_step(std::span<const double> features, LstmState& state,
                                  LstmStepCache* cache = nullptr) const;
    double value_step(std::span<const double> features, LstmState& state, LstmStepCache* cache = nullptr) const;

private:
    features::FeatureLayout layout_;
    LstmNetwork policy_;
    LstmNetwork value_;
    features::NormalizerBank policy_norm_;
    features::NormalizerBank value_norm_;
};

} // namespace lhopt::policy
