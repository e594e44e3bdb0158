#pragma once

#include <vector>

#include "lhopt/common/rng.hpp"
#include "lhopt/tasks/task.hpp"

namespace lhopt::tasks {

struct NqmRanges {
    int dim_min = 10;
    int dim_max = 100;
    double kappa_min = 0.1;
    double kappa_max = 1.0;
};

/// Noisy quadratic model: loss = 1/2 sum h_i theta_i^2, stochastic gradient
/// h_i theta_i + h_i eps_i with eps_i ~ N(0, sigma_i^2).
class NqmTask final : public InnerTask {
public:
    NqmTask(std::vector<double> curvature, std::vector<double> noise_std, std::vector<double> theta0,
            std::uint64_t seed);

    /// h_i = 1/i, sigma_i = kappa sqrt(h_i), theta0 ~ N(0, 1).
    static NqmTask sample(std::uint64_t seed, const NqmRanges& ranges);
    static NqmTask standard(int dim, double kappa, std::uint64_t seed);

    TaskFamily family() const override { return TaskFamily::nqm; }
    std::uint64_t seed() const override { return seed_; }
    TensorList initial_params() const override;
    TrainStep train_step(const TensorList& params, std::size_t step) const override;
    double validation_loss(const TensorList& params) const override;
    NoiseProbe noise_probe(const TensorList& params, std::size_t step, const TrainStep& step_result) const override;
    std::string describe() const override;

    std::size_t dim() const noexcept { return curvature_.size(); }
    double kappa() const noexcept { return kappa_; }
    const std::vector<double>& curvature() const noexcept { return curvature_; }
    const std::vector<double>& noise_std() const noexcept { return noise_std_; }

    double loss(std::span<const double> theta) const;
    /// One noisy gradient sample.
    std::vector<double> sample_gradient(std::span<const double> theta, Rng& rng) const;

private:
    std::vector<double> curvature_;
    std::vector<double> noise_std_;
    std::vector<double> theta0_;
    std::uint64_t seed_;
    double kappa_ = 0.0;
};

struct LossAndGrad {
    double loss;
    std::vector<double> grad;
};

/// Deterministic loss and one stochastic gradient at theta.
LossAndGrad nqm_loss_and_grad(const NqmTask& task, std::span<const double> theta, Rng& rng);

} // namespace lhopt::tasks
