#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "lhopt/common/rng.hpp"
#include "lhopt/optim/hyper_params.hpp"

namespace lhopt::actions {

using optim::HyperId;
using optim::HyperParams;

enum class ActionType { scale, logit_shift };

struct ActionHead {
    HyperId target;
    ActionType type;
    std::vector<double> values;

    std::size_t arity() const noexcept { return values.size(); }
};

inline constexpr std::size_t restart_arity = 10;
inline constexpr std::size_t checkpoint_slots = 3;

/// Hyperparameter heads plus an optional 10-way restart head (always last).
struct ActionSpace {
    std::vector<ActionHead> heads;
    bool restart_head = true;

    std::size_t head_count() const noexcept { return heads.size() + (restart_head ? 1 : 0); }
    std::vector<std::size_t> arities() const;
    std::vector<std::string> hyper_names() const;

    /// All eight hyperparameter heads with the restart head.
    static ActionSpace full();
    /// Learning-rate and grad-clip-fraction heads only, no restarts.
    static ActionSpace reduced();
    static ActionSpace from_names(const std::vector<std::string>& names, bool restart);
};

/// The head definition for one hyperparameter (values and action type).
ActionHead default_head(HyperId id);

struct Bounds {
    double min;
    double max;
};

/// Clamp range per controllable hyperparameter.
struct HyperBounds {
    std::array<Bounds, 8> ranges{{
        {1e-7, 1e1},  // learning_rate
        {0.0, 1.0},   // weight_decay
        {1e-12, 1.0}, // epsilon
        {1e-4, 0.5},  // one_minus_beta1
        {1e-4, 0.5},  // one_minus_beta2
        {0.01, 0.99}, // grad_clip_fraction
        {1e-4, 0.5},  // one_minus_beta_gradclip
        {1e-4, 0.5},  // one_minus_beta_lamb
    }};

    const Bounds& operator[](HyperId id) const { return ranges[static_cast<std::size_t>(id)]; }
    Bounds& operator[](HyperId id) { return ranges[static_cast<std::size_t>(id)]; }

    HyperParams clamp(HyperParams h) const;
    bool contains(const HyperParams& h) const;
};

/// scale: value * c; logit_shift: sigmoid(logit(value) + c); then clamped.
HyperParams apply_action(const HyperParams& h, const ActionHead& head, std::size_t choice, const HyperBounds& bounds);

/// Initial-value noise, one entry per HyperId: a multiplier for scale-type
/// hyperparameters and an additive logit offset for grad_clip_fraction.
struct InitialNoise {
    std::array<double, 8> draws{1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0};

    /// Log multipliers and the logit offset, as fed to the value function.
    std::vector<double> encode() const;
};

InitialNoise sample_initial_noise(Rng& rng);
HyperParams apply_initial_noise(const HyperParams& base, const InitialNoise& noise, const HyperBounds& bounds);

/// Noise range per hyperparameter; [lo, hi] multipliers, or logit offsets for
/// grad_clip_fraction.
Bounds noise_range(HyperId id);

} // namespace lhopt::actions
