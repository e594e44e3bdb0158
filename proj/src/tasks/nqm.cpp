#include "lhopt/tasks/nqm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace lhopt::tasks {

namespace {

constexpr std::uint64_t batch_stream = 0x6e716d2d62617463ULL;
constexpr std::uint64_t probe_stream = 0x6e716d2d70726f62ULL;
constexpr std::uint64_t init_stream = 0x6e716d2d696e6974ULL;
constexpr int probe_batch = 8;

} // namespace

std::string family_name(TaskFamily family) { return family == TaskFamily::nqm ? "nqm" : "mlp"; }

NqmTask::NqmTask(std::vector<double> curvature, std::vector<double> noise_std, std::vector<double> theta0,
                 std::uint64_t seed)
    : curvature_(std::move(curvature)), noise_std_(std::move(noise_std)), theta0_(std::move(theta0)), seed_(seed) {
    if (curvature_.size() != noise_std_.size() || curvature_.size() != theta0_.size())
        throw std::invalid_argument("NqmTask: dimension mismatch");
    for (double h : curvature_)
        if (!(h > 0.0)) throw std::invalid_argument("NqmTask: curvature must be positive");
    for (double s : noise_std_)
        if (!(s >= 0.0)) throw std::invalid_argument("NqmTask: noise std must be nonnegative");
}

NqmTask NqmTask::standard(int dim, double kappa, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("NqmTask: dim must be positive");
    std::vector<double> h(dim), sigma(dim), theta(dim);
    Rng rng(derive_seed(seed, init_stream));
    for (int i = 0; i < dim; ++i) {
        h[i] = 1.0 / static_cast<double>(i + 1);
        sigma[i] = kappa * std::sqrt(h[i]);
        theta[i] = rng.normal();
    }
    NqmTask task(std::move(h), std::move(sigma), std::move(theta), seed);
    task.kappa_ = kappa;
    return task;
}

NqmTask NqmTask::sample(std::uint64_t seed, const NqmRanges& ranges) {
    Rng rng(seed);
    const int dim = rng.uniform_int(ranges.dim_min, ranges.dim_max);
    const double kappa = rng.log_uniform(ranges.kappa_min, ranges.kappa_max);
    return standard(dim, kappa, seed);
}

TensorList NqmTask::initial_params() const {
    Tensor theta({theta0_.size()});
    theta.values = theta0_;
    return {theta};
}

double NqmTask::loss(std::span<const double> theta) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) acc += curvature_[i] * theta[i] * theta[i];
    return 0.5 * acc;
}

std::vector<double> NqmTask::sample_gradient(std::span<const double> theta, Rng& rng) const {
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double eps = noise_std_[i] > 0.0 ? rng.normal(0.0, noise_std_[i]) : 0.0;
        g[i] = curvature_[i] * theta[i] + curvature_[i] * eps;
    }
    return g;
}

LossAndGrad nqm_loss_and_grad(const NqmTask& task, std::span<const double> theta, Rng& rng) {
    if (theta.size() != task.dim()) throw std::invalid_argument("nqm_loss_and_grad: dimension mismatch");
    return {task.loss(theta), task.sample_gradient(theta, rng)};
}

TrainStep NqmTask::train_step(const TensorList& params, std::size_t step) const {
    Rng rng(derive_seed(seed_, batch_stream, step));
    auto [loss, grad] = nqm_loss_and_grad(*this, params.at(0).values, rng);
    Tensor g({grad.size()});
    g.values = std::move(grad);
    return {loss, {std::move(g)}};
}

double NqmTask::validation_loss(const TensorList& params) const { return loss(params.at(0).values); }

NoiseProbe NqmTask::noise_probe(const TensorList& params, std::size_t step, const TrainStep& step_result) const {
    Rng rng(derive_seed(seed_, probe_stream, step));
    const auto& theta = params.at(0).values;
    std::vector<double> mean(theta.size(), 0.0);
    for (int k = 0; k < probe_batch; ++k) {
        const auto g = sample_gradient(theta, rng);
        for (std::size_t i = 0; i < g.size(); ++i) mean[i] += g[i] / probe_batch;
    }
    const auto& g1 = step_result.grads.at(0).values;
    return {.small_norm_sq = dot(g1, g1), .big_norm_sq = dot(mean, mean), .small_batch = 1.0,
            .big_batch = static_cast<double>(probe_batch)};
}

std::string NqmTask::describe() const {
    std::ostringstream os;
    os << "nqm(dim=" << dim() << ", kappa=" << kappa_ << ", seed=" << seed_ << ")";
    return os.str();
}

} // namespace lhopt::tasks
