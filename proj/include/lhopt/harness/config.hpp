#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "lhopt/harness/training.hpp"

namespace lhopt::harness {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a JSON training configuration. Every key is optional; unknown keys
/// are rejected with their dotted path so typos do not pass silently.
///
/// {
///   "seed": 0, "iterations": 200, "hidden": 64, "policy_repeats": 4,
///   "baseline_beta": 0.99, "cadence": 4, "initial_noise": true,
///   "heldout_tasks": 16, "eval_every": 10,
///   "heads": ["learning_rate", "grad_clip_fraction"], "restart_head": false,
///   "bounds": {"learning_rate": [1e-7, 10], ...},
///   "ppo": {"clip": 0.2, "epochs": 4, "minibatch_episodes": 0, "learning_rate": 3e-4,
///           "entropy_coef": 0.01, "value_coef": 0.5, "max_grad_norm": 0.5, "max_reuse": 4},
///   "distribution": {
///     "nqm_weight": 1, "mlp_weight": 0,
///     "nqm": {"dim_min": 10, "dim_max": 100, "kappa_min": 0.1, "kappa_max": 1},
///     "episode": {"outer_min": 8, "outer_max": 16, "inner_min": 16, "inner_max": 32},
///     "mlp": {"depth_min": 1, "depth_max": 2, "widths": [16, 32, 64], "batch_sizes": [16, 32, 64],
///             "activations": [...], "normalizations": [...], "losses": [...],
///             "datasets": [{"name": "blobs", "kind": "blobs", "samples": 512, ...},
///                          {"name": "mnist", "kind": "idx", "images": "...", "labels": "..."}]}
///   }
/// }
TrainingConfig parse_training_config(const std::string& json_text);
TrainingConfig load_training_config(const std::filesystem::path& path);

} // namespace lhopt::harness
