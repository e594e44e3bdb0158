#include "lhopt/actions/checkpoint.hpp"

#include <stdexcept>
#include <utility>

namespace lhopt::actions {

RestartDecoded decode_restart(std::size_t index) {
    if (index >= restart_arity) throw std::out_of_range("restart action index outside [0, 10)");
    if (index == 0) return {};
    const std::size_t k = index - 1;
    static constexpr RestartOp ops[] = {RestartOp::save, RestartOp::load, RestartOp::swap};
    return {.op = ops[k % 3], .slot = k / 3};
}

RestartOutcome CheckpointStore::apply(std::size_t index, LiveState& live, double progress, double loss_percentile) {
    RestartOutcome outcome{.action = decode_restart(index)};
    auto& slot = slots_[outcome.action.slot];
    switch (outcome.action.op) {
    case RestartOp::none: break;
    case RestartOp::save: slot = CheckpointEntry{live, progress, loss_percentile}; break;
    case RestartOp::load:
        if (!slot) {
            outcome.empty_slot = true;
            break;
        }
        live = slot->state;
        break;
    case RestartOp::swap:
        if (!slot) {
            outcome.empty_slot = true;
            break;
        }
        std::swap(live, slot->state);
        slot->progress = progress;
        slot->loss_percentile = loss_percentile;
        break;
    }
    return outcome;
}

} // namespace lhopt::actions
