#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lhopt/harness/episode.hpp"
#include "lhopt/optim/adamw.hpp"
#include "lhopt/optim/schedules.hpp"
#include "lhopt/tasks/distribution.hpp"

namespace lhopt::harness {

/// A task instance used for evaluation, with the controller's step budget.
struct EvalTask {
    std::shared_ptr<const tasks::InnerTask> task;
    std::string family;
    std::uint64_t seed = 0;
    EpisodeConfig episode;
    std::vector<double> task_encoding;
};

/// Draws `count` tasks with seeds derived from `seed`.
std::vector<EvalTask> sample_eval_tasks(const tasks::TaskDistribution& dist, std::size_t count, std::uint64_t seed,
                                        std::size_t cadence = 4);

/// The AdamW settings shared by every grid baseline (only the learning rate varies).
optim::AdamWHypers baseline_adamw_hypers();

/// AdamW with a learning-rate schedule for `steps` inner steps on the task's
/// own initial weights and batch order. Returns the final validation loss,
/// or +inf if the run fails or ends non-finite.
double run_adamw_baseline(const tasks::InnerTask& task, const optim::BaselineSpec& spec, std::size_t steps);

std::string baseline_name(const optim::BaselineSpec& spec);

struct TaskEvalRecord {
    std::string family;
    std::uint64_t seed = 0;
    std::size_t method_steps = 0;
    double method_loss = 0.0;
    /// One loss per baseline at twice the method's inner-step budget.
    std::vector<double> baseline_2x;
    /// One loss per baseline at the method's budget.
    std::vector<double> baseline_1x;
};

struct FamilyFractions {
    std::string family;
    std::size_t tasks = 0;
    double fraction_2x = 0.0;
    double fraction_1x = 0.0;
};

struct EvalReport {
    std::vector<std::string> baseline_names;
    std::vector<TaskEvalRecord> tasks;
    double fraction_2x = 0.0;
    double fraction_1x = 0.0;
    /// Sorted by family name.
    std::vector<FamilyFractions> families;
};

/// A task counts at a threshold when the method's final validation loss is
/// at most the best baseline loss at that threshold's budget. Non-finite
/// baseline losses count as +inf; a non-finite method loss never counts.
/// Records are sorted by (family, seed) first. Throws on an empty task set.
EvalReport aggregate_speedup(std::vector<TaskEvalRecord> records, std::vector<std::string> baseline_names);

/// Final validation loss of the evaluated method on one task at 1x budget.
using MethodRunner = std::function<double(const EvalTask&)>;

EvalReport evaluate_speedup_fraction(const MethodRunner& method, const std::vector<EvalTask>& tasks,
                                     const std::vector<optim::BaselineSpec>& grid, bool include_1x = true);

/// Controller run for evaluation: default initial hyperparameters, greedy
/// actions unless `sample_seed` is given.
MethodRunner controller_runner(const policy::Controller& controller, const actions::ActionSpace& space,
                               const actions::HyperBounds& bounds, std::optional<std::uint64_t> sample_seed = {});

/// Fraction of tasks where the controller's final validation loss is strictly
/// below the static-initial-hyperparameter run at the same budget.
struct StaticComparison {
    std::size_t tasks = 0;
    std::size_t wins = 0;
    double win_fraction = 0.0;
    std::vector<double> controller_losses;
    std::vector<double> static_losses;
};

StaticComparison compare_with_static(const MethodRunner& method, const std::vector<EvalTask>& tasks,
                                     const actions::ActionSpace& space, const actions::HyperBounds& bounds);

std::string eval_report_json(const EvalReport& report);
/// One row per task: family, seed, method_loss, best_2x, best_1x, counted_2x, counted_1x.
std::string eval_report_csv(const EvalReport& report);

} // namespace lhopt::harness
