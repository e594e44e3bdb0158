#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "lhopt/actions/action_space.hpp"
#include "lhopt/features/assembler.hpp"
#include "lhopt/harness/schedule_file.hpp"
#include "lhopt/policy/controller.hpp"
#include "lhopt/policy/ppo.hpp"
#include "lhopt/reward/reward.hpp"
#include "lhopt/tasks/task.hpp"

namespace lhopt::harness {

struct EpisodeConfig {
    int outer_steps = 16;
    int inner_per_outer = 32;
    /// Inner statistics and learning-curve points are taken every `cadence` steps.
    std::size_t cadence = 4;
    bool probe_noise = true;

    std::size_t total_inner_steps() const noexcept {
        return static_cast<std::size_t>(outer_steps) * static_cast<std::size_t>(inner_per_outer);
    }
    /// Throws std::invalid_argument unless outer_steps >= 2, inner_per_outer >= 1, cadence >= 1.
    void validate() const;
};

/// Everything that fixes a run apart from who chooses the hyperparameters.
struct EpisodeContext {
    const tasks::InnerTask* task = nullptr;
    EpisodeConfig config;
    optim::HyperParams initial_hypers;
    actions::ActionSpace space = actions::ActionSpace::reduced();
    actions::HyperBounds bounds;
    /// Value-function extras.
    std::vector<double> task_encoding;
    std::vector<double> initial_noise;
};

/// The feature layout implied by an action space and the value extras.
features::FeatureLayout make_layout(const actions::ActionSpace& space, std::size_t task_encoding_width,
                                    std::size_t initial_noise_width);

/// Baseline curve and its fit, against which a run's losses become rewards.
struct RewardContext {
    reward::PowerLawFit fit;
    reward::LearningCurve baseline;
    reward::RewardConfig config;
    features::BaselineSummary summary;
};

RewardContext make_reward_context(const reward::LearningCurve& baseline, const reward::RewardConfig& config = {});

struct StaticDriver {};

struct ScheduleDriver {
    const ScheduleFile* schedule = nullptr;
    /// Restart events are replayed only on the task that produced the schedule.
    bool apply_restarts = true;
};

struct PolicyDriver {
    const policy::Controller* controller = nullptr;
    std::uint64_t sample_seed = 0;
    bool greedy = false;
    /// Gives the value function its reward-so-far input when set.
    const RewardContext* reward = nullptr;
};

using Driver = std::variant<StaticDriver, ScheduleDriver, PolicyDriver>;

/// A learning-curve row, taken after `step` inner steps.
struct CurveRecord {
    std::size_t step = 0;
    double progress = 0.0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    optim::HyperParams hypers;
};

/// What happened at one outer step, before its block of inner steps.
struct OuterRecord {
    double progress = 0.0;
    /// Hyperparameters in force for the following block.
    optim::HyperParams hypers;
    int restart = 0;
    bool restart_empty_slot = false;
    std::vector<int> actions;
};

struct EpisodeResult {
    std::vector<CurveRecord> curve;
    std::vector<OuterRecord> outer;
    /// Validation loss at the end of each block.
    std::vector<double> boundary_valid_losses;
    double final_train_loss = 0.0;
    double final_valid_loss = 0.0;
    std::size_t inner_steps_run = 0;
    std::uint64_t initial_params_hash = 0;

    /// Policy runs only: the learner's view and the raw observations that
    /// feed the normalizers.
    policy::Trajectory trajectory;
    std::vector<std::vector<double>> raw_policy_features;
    std::vector<std::vector<double>> raw_value_features;

    reward::LearningCurve learning_curve() const;
};

/// Runs the inner task for outer_steps blocks. At each outer step the driver
/// acts (restart first, then hyperparameters) and inner training resumes.
/// Deterministic in (context, driver, weights). Divergence does not abort:
/// NaN losses flow into features and rewards.
EpisodeResult run_episode(const EpisodeContext& context, const Driver& driver);

/// Shaped rewards for a policy run, written into its trajectory. Returns the
/// terminal reward of the final validation loss.
double assign_rewards(EpisodeResult& result, const RewardContext& reward);

/// One record per outer step with the hyperparameters in force after it acted.
ScheduleFile export_schedule(const EpisodeResult& result, std::uint64_t policy_hash, std::uint64_t task_seed);

/// Runs `context` under the schedule. On the source task (same_task) restart
/// events are replayed and the original learning curve is reproduced exactly.
EpisodeResult replay_schedule(const ScheduleFile& schedule, const EpisodeContext& context, bool same_task);

/// Columns: step, progress, train_loss, valid_loss, then schedule_hyper_columns().
/// Doubles are written in shortest round-trip form, so equal curves give equal bytes.
std::string curve_csv(const EpisodeResult& result);
std::string curve_json(const EpisodeResult& result);

} // namespace lhopt::harness
