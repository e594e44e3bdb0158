#pragma once

#include <cstdint>
#include <vector>

#include "lhopt/common/tensor.hpp"

namespace lhopt::optim {

struct AdamWHypers {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 1e-2;
};

struct AdamWState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::uint64_t step = 0;

    AdamWState() = default;
    explicit AdamWState(const TensorList& params);
};

/// Decoupled-weight-decay Adam (p <- p(1 - lr*wd) - lr * m_hat / (sqrt(v_hat) + eps)).
/// Returns false and leaves a tensor untouched when its update is non-finite.
bool adamw_step(TensorList& params, const TensorList& grads, const AdamWHypers& h, AdamWState& state);

/// Same update over a single flat parameter vector; used by the controller trainer.
bool adamw_step(std::vector<double>& params, const std::vector<double>& grads, const AdamWHypers& h,
                std::vector<double>& m, std::vector<double>& v, std::uint64_t& step);

} // namespace lhopt::optim
