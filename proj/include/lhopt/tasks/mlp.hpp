#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "lhopt/tasks/dataset.hpp"
#include "lhopt/tasks/task.hpp"

namespace lhopt::tasks {

enum class Activation { relu, leaky_relu, very_leaky_relu, elu, prelu };
enum class Normalization { none, layernorm };
enum class LossKind { cce, mae, mse, huber };

inline constexpr Activation all_activations[] = {Activation::relu, Activation::leaky_relu,
                                                 Activation::very_leaky_relu, Activation::elu, Activation::prelu};
inline constexpr Normalization all_normalizations[] = {Normalization::none, Normalization::layernorm};
inline constexpr LossKind all_losses[] = {LossKind::cce, LossKind::mae, LossKind::mse, LossKind::huber};

std::string_view activation_name(Activation a);
std::string_view normalization_name(Normalization n);
std::string_view loss_name(LossKind l);

struct MlpArchitecture {
    std::vector<std::size_t> hidden;
    Activation activation = Activation::relu;
    Normalization normalization = Normalization::none;
    LossKind loss = LossKind::cce;
};

/// Fully connected network: per hidden layer affine -> optional layer norm
/// -> activation; a final affine layer feeds the loss. Parameters per hidden
/// layer are [W, b, (gain, bias if layernorm), (slope if prelu)], then the
/// output [W, b]. W is stored (out x in) row-major.
class MlpTask final : public InnerTask {
public:
    MlpTask(std::shared_ptr<const Dataset> data, MlpArchitecture arch, std::size_t batch_size, std::uint64_t seed,
            std::size_t valid_cap = 512);

    TaskFamily family() const override { return TaskFamily::mlp; }
    std::uint64_t seed() const override { return seed_; }
    /// Glorot-uniform weights, zero biases, unit gains, 0.25 PReLU slopes.
    TensorList initial_params() const override;
    TrainStep train_step(const TensorList& params, std::size_t step) const override;
    double validation_loss(const TensorList& params) const override;
    NoiseProbe noise_probe(const TensorList& params, std::size_t step, const TrainStep& step_result) const override;
    std::string describe() const override;

    /// Mean loss over the given rows and exact reverse-mode gradients.
    /// Non-finite activations yield a NaN loss rather than an exception.
    TrainStep forward_backward(const TensorList& params, std::span<const std::size_t> rows) const;
    double loss_on(const TensorList& params, std::span<const std::size_t> rows) const;

    std::vector<std::size_t> batch_rows(std::size_t step) const;
    std::size_t parameter_count() const;
    const MlpArchitecture& architecture() const noexcept { return arch_; }
    const Dataset& dataset() const noexcept { return *data_; }
    std::size_t batch_size() const noexcept { return batch_size_; }

private:
    std::shared_ptr<const Dataset> data_;
    MlpArchitecture arch_;
    std::size_t batch_size_;
    std::uint64_t seed_;
    std::vector<std::size_t> valid_rows_;
};

} // namespace lhopt::tasks
