#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "lhopt/actions/action_space.hpp"
#include "lhopt/common/tensor.hpp"
#include "lhopt/optim/ciao.hpp"

namespace lhopt::actions {

/// The part of a run that restart actions save and restore.
struct LiveState {
    TensorList params;
    optim::InnerState optimizer;
    HyperParams hypers;

    bool operator==(const LiveState&) const = default;
};

struct CheckpointEntry {
    LiveState state;
    double progress = 0.0;
    double loss_percentile = 0.5;

    bool operator==(const CheckpointEntry&) const = default;
};

enum class RestartOp { none, save, load, swap };

struct RestartDecoded {
    RestartOp op = RestartOp::none;
    std::size_t slot = 0;
};

/// 0 is a no-op; 1 + 3*slot + {0: save, 1: load, 2: swap}.
RestartDecoded decode_restart(std::size_t index);

struct RestartOutcome {
    RestartDecoded action;
    /// Load or swap against an empty slot (nothing happened).
    bool empty_slot = false;
};

/// Three deep-copied snapshot slots. Restarts never rewind the step budget.
class CheckpointStore {
public:
    const std::optional<CheckpointEntry>& slot(std::size_t i) const { return slots_.at(i); }
    bool operator==(const CheckpointStore&) const = default;

    /// Applies restart action `index` in [0, 10) to `live`.
    RestartOutcome apply(std::size_t index, LiveState& live, double progress, double loss_percentile);

private:
    std::array<std::optional<CheckpointEntry>, checkpoint_slots> slots_;
};

inline RestartOutcome restart_action(CheckpointStore& store, LiveState& live, std::size_t index, double progress,
                                     double loss_percentile) {
    return store.apply(index, live, progress, loss_percentile);
}

} // namespace lhopt::actions
