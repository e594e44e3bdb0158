#pragma once

#include <cstdint>
#include <string>

#include "lhopt/common/tensor.hpp"

namespace lhopt::tasks {

enum class TaskFamily { nqm, mlp };

std::string family_name(TaskFamily family);

struct TrainStep {
    double loss = 0.0;
    TensorList grads;
};

/// Squared gradient norms at two batch sizes, for the noise-scale estimate.
struct NoiseProbe {
    double small_norm_sq = 0.0;
    double big_norm_sq = 0.0;
    double small_batch = 1.0;
    double big_batch = 2.0;
};

/// An inner training problem. Implementations are immutable; the minibatch
/// (or gradient noise) used at step i is a pure function of (seed, i), so
/// runs are reproducible and replays after restarts see the same data.
class InnerTask {
public:
    virtual ~InnerTask() = default;

    virtual TaskFamily family() const = 0;
    virtual std::uint64_t seed() const = 0;
    virtual TensorList initial_params() const = 0;
    virtual TrainStep train_step(const TensorList& params, std::size_t step) const = 0;
    virtual double validation_loss(const TensorList& params) const = 0;
    virtual NoiseProbe noise_probe(const TensorList& params, std::size_t step, const TrainStep& step_result) const = 0;
    virtual std::string describe() const = 0;
};

} // namespace lhopt::tasks
