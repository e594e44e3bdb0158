#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lhopt/harness/episode.hpp"
#include "lhopt/harness/evaluation.hpp"
#include "lhopt/policy/ppo.hpp"
#include "lhopt/tasks/distribution.hpp"

namespace lhopt::harness {

struct TrainingConfig {
    tasks::DistributionConfig distribution = tasks::nqm_only_config();
    std::vector<std::string> heads = {"learning_rate", "grad_clip_fraction"};
    bool restart_head = false;
    actions::HyperBounds bounds;
    std::size_t hidden = 64;
    policy::PpoConfig ppo;
    /// Tasks drawn during outer training; each gives one PPO update.
    int iterations = 200;
    /// Policy rollouts per task against one baseline run.
    int policy_repeats = 4;
    double baseline_beta = reward::baseline_ema_beta;
    std::size_t cadence = 4;
    bool initial_noise = true;
    /// Held-out tasks scored every `eval_every` iterations (0 disables).
    int heldout_tasks = 16;
    int eval_every = 10;
    /// When false the loop runs without PPO updates (self-play parity checks).
    bool learn = true;
    int max_nonfinite_iterations = 10;
    std::uint64_t seed = 0;

    actions::ActionSpace space() const;
    void validate() const;
};

struct TrainingLogEntry {
    int iteration = 0;
    std::uint64_t task_seed = 0;
    std::string family;
    double baseline_final_loss = 0.0;
    double mean_policy_final_loss = 0.0;
    double mean_terminal_reward = 0.0;
    std::vector<double> terminal_rewards;
    policy::PpoDiagnostics ppo;
};

struct HeldoutEval {
    int iteration = 0;
    /// Terminal reward per held-out task, in task order.
    std::vector<double> rewards;
    double mean = 0.0;
};

struct TrainingResult {
    policy::Controller controller;
    policy::Controller baseline;
    std::vector<TrainingLogEntry> log;
    std::vector<HeldoutEval> heldout;
    std::size_t baseline_runs = 0;
    std::size_t policy_runs = 0;
    int max_reuse_observed = 0;
};

/// Per iteration: draw a task and initial-hyperparameter noise, run the EMA
/// baseline controller once, fit its curve, run the current controller
/// policy_repeats times on the identical task, shape rewards, update by PPO,
/// fold observations into the normalizers, then sync the EMA baseline.
/// Throws std::runtime_error after max_nonfinite_iterations consecutive
/// iterations whose rewards are all non-finite.
TrainingResult train_outer(const TrainingConfig& config,
                           const std::function<void(const TrainingLogEntry&)>& on_iteration = {},
                           const std::function<void(const HeldoutEval&)>& on_heldout = {});

/// Held-out scoring set: tasks plus a reward context from the static run of
/// the default initial hyperparameters on each.
struct HeldoutSet {
    std::vector<EvalTask> tasks;
    std::vector<RewardContext> rewards;
};

HeldoutSet make_heldout_set(const tasks::TaskDistribution& dist, const TrainingConfig& config);
HeldoutEval score_heldout(const policy::Controller& controller, const HeldoutSet& set, const TrainingConfig& config,
                          int iteration);

/// One-sided paired t-test that held-out reward rose from the first fifth of
/// the evaluations to the last fifth, pairing by task.
struct QuintileTest {
    double first_mean = 0.0;
    double last_mean = 0.0;
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::size_t pairs = 0;
};

QuintileTest quintile_test(const std::vector<HeldoutEval>& evals);

std::string training_log_csv(const TrainingResult& result);

} // namespace lhopt::harness
