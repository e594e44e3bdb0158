#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lhopt/policy/controller.hpp"

namespace lhopt::policy {

struct PpoConfig {
    double clip = 0.2;
    int epochs = 4;
    /// Episodes per minibatch; 0 uses the whole batch.
    std::size_t minibatch_episodes = 0;
    double learning_rate = 3e-4;
    double entropy_coef = 0.01;
    double value_coef = 0.5;
    double max_grad_norm = 0.5;
    /// Number of PPO batches a rollout may appear in. At most 4.
    int max_reuse = 4;
    double gamma = 1.0;
    bool normalize_advantages = true;

    /// Throws std::invalid_argument for out-of-range settings.
    void validate() const;
};

/// One outer step as seen by the learner. Features are normalized inputs.
struct TrajectoryStep {
    std::vector<double> policy_features;
    std::vector<double> value_features;
    std::vector<int> actions;
    double log_prob = 0.0;
    double value = 0.0;
    double reward = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    bool terminal = true;
};

/// Discounted returns-to-go per step.
std::vector<double> returns_to_go(const Trajectory& trajectory, double gamma);

/// Returns and advantages (return minus the stored value estimate, optionally
/// standardized over the whole batch).
struct PreparedBatch {
    std::vector<const Trajectory*> episodes;
    std::vector<std::vector<double>> returns;
    std::vector<std::vector<double>> advantages;

    std::size_t step_count() const;
};

PreparedBatch prepare_batch(std::span<const Trajectory* const> episodes, const PpoConfig& config);

struct ControllerGradients {
    std::vector<double> policy;
    std::vector<double> value;
};

struct ObjectiveTerms {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    /// policy_loss - entropy_coef * entropy + value_coef * value_loss.
    double total = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
    std::size_t samples = 0;
};

/// Clipped-surrogate PPO objective (to be minimized) over the selected
/// episodes, averaged per step. When `grads` is given, its vectors are resized
/// and filled with exact gradients by backpropagation through time. Policy
/// and value networks are disjoint, so the value loss only reaches value
/// parameters.
ObjectiveTerms ppo_objective(const Controller& controller, const PreparedBatch& batch, const PpoConfig& config,
                             ControllerGradients* grads, std::span<const std::size_t> episode_subset = {});

inline ObjectiveTerms controller_backward(const Controller& controller, const PreparedBatch& batch,
                                          const PpoConfig& config, ControllerGradients& grads) {
    return ppo_objective(controller, batch, config, &grads);
}

struct PpoDiagnostics {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
    double grad_norm = 0.0;
    std::size_t samples = 0;
    int steps_taken = 0;
    int steps_skipped = 0;
    /// Every minibatch step was skipped for non-finite values.
    bool skipped = false;
};

/// Holds Adam state for both networks across updates.
class PpoTrainer {
public:
    explicit PpoTrainer(PpoConfig config = {}, std::uint64_t seed = 0);

    const PpoConfig& config() const noexcept { return config_; }
    PpoDiagnostics update(Controller& controller, std::span<const Trajectory* const> episodes);

private:
    PpoConfig config_;
    Rng rng_;
    std::vector<double> policy_m_, policy_v_, value_m_, value_v_;
    std::uint64_t policy_step_ = 0, value_step_ = 0;
};

/// Rollouts waiting to be learned from. Each appears in at most max_reuse
/// batches and is evicted after its last use.
class RolloutBuffer {
public:
    explicit RolloutBuffer(int max_reuse = 4, std::size_t capacity = 0);

    void add(Trajectory trajectory);
    /// Every buffered rollout, each counted as one use.
    std::vector<Trajectory> take_batch();

    std::size_t size() const noexcept { return entries_.size(); }
    int max_reuse() const noexcept { return max_reuse_; }
    /// Largest use count any rollout has reached.
    int max_uses_observed() const noexcept { return max_uses_observed_; }
    std::size_t rollouts_added() const noexcept { return added_; }

private:
    struct Entry {
        Trajectory trajectory;
        int uses = 0;
    };
    int max_reuse_;
    std::size_t capacity_;
    std::vector<Entry> entries_;
    int max_uses_observed_ = 0;
    std::size_t added_ = 0;
};

} // namespace lhopt::policy
