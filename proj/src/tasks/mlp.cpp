#include "lhopt/tasks/mlp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "lhopt/common/rng.hpp"

namespace lhopt::tasks {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr double layernorm_eps = 1e-5;
constexpr double huber_delta = 1.0;
constexpr double elu_alpha = 1.0;
constexpr double prelu_init = 0.25;
constexpr std::uint64_t batch_stream = 0x6d6c702d62617463ULL;
constexpr std::uint64_t init_stream = 0x6d6c702d696e6974ULL;

double fixed_slope(Activation a) {
    switch (a) {
    case Activation::leaky_relu: return 0.01;
    case Activation::very_leaky_relu: return 0.3;
    default: return 0.0;
    }
}

struct HiddenCache {
    Matrix input;   // a_{l-1}
    Matrix normed;  // layer-norm output before gain (n)
    Vector inv_std; // per column
    Matrix pre_act; // y
};

struct LayerIndex {
    std::size_t weight, bias;
    std::size_t gain = 0, shift = 0, slope = 0;
};

std::vector<LayerIndex> layer_indices(const MlpArchitecture& arch) {
    std::vector<LayerIndex> out;
    std::size_t k = 0;
    for (std::size_t l = 0; l < arch.hidden.size(); ++l) {
        LayerIndex li{k, k + 1};
        k += 2;
        if (arch.normalization == Normalization::layernorm) {
            li.gain = k++;
            li.shift = k++;
        }
        if (arch.activation == Activation::prelu) li.slope = k++;
        out.push_back(li);
    }
    out.push_back({k, k + 1});
    return out;
}

Eigen::Map<const RowMajor> weight_view(const Tensor& t) {
    return {t.values.data(), static_cast<Eigen::Index>(t.shape[0]), static_cast<Eigen::Index>(t.shape[1])};
}

Eigen::Map<const Vector> vec_view(const Tensor& t) {
    return {t.values.data(), static_cast<Eigen::Index>(t.values.size())};
}

void store(Tensor& dst, const Matrix& m) {
    Eigen::Map<RowMajor>(dst.values.data(), m.rows(), m.cols()) = m;
}

void store(Tensor& dst, const Vector& v) { Eigen::Map<Vector>(dst.values.data(), v.size()) = v; }

/// Loss value and dLoss/dOutput for one batch (columns are samples).
double output_loss(const Matrix& out, const Dataset& data, std::span<const std::size_t> rows, LossKind kind,
                   Matrix* grad) {
    const auto batch = static_cast<double>(rows.size());
    const Eigen::Index k = out.rows();
    if (grad) grad->resize(out.rows(), out.cols());
    double total = 0.0;
    for (Eigen::Index b = 0; b < out.cols(); ++b) {
        const std::size_t r = rows[static_cast<std::size_t>(b)];
        if (kind == LossKind::cce) {
            const double mx = out.col(b).maxCoeff();
            const Vector e = (out.col(b).array() - mx).exp();
            const double z = e.sum();
            const int label = data.labels[r];
            total += -(out(label, b) - mx - std::log(z));
            if (grad) {
                grad->col(b) = e / z;
                (*grad)(label, b) -= 1.0;
            }
            continue;
        }
        for (Eigen::Index j = 0; j < k; ++j) {
            const double target = data.is_classification() ? (data.labels[r] == j ? 1.0 : 0.0)
                                                           : data.targets[r * data.target_dim + j];
            const double diff = out(j, b) - target;
            double value = 0.0, slope = 0.0;
            switch (kind) {
            case LossKind::mse:
                value = diff * diff;
                slope = 2.0 * diff;
                break;
            case LossKind::mae:
                value = std::abs(diff);
                slope = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                break;
            case LossKind::huber:
                if (std::abs(diff) <= huber_delta) {
                    value = 0.5 * diff * diff;
                    slope = diff;
                } else {
                    value = huber_delta * (std::abs(diff) - 0.5 * huber_delta);
                    slope = diff > 0.0 ? huber_delta : -huber_delta;
                }
                break;
            case LossKind::cce: break;
            }
            total += value / static_cast<double>(k);
            if (grad) (*grad)(j, b) = slope / static_cast<double>(k);
        }
    }
    if (grad) *grad /= batch;
    return total / batch;
}

} // namespace

std::string_view activation_name(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::very_leaky_relu: return "very_leaky_relu";
    case Activation::elu: return "elu";
    case Activation::prelu: return "prelu";
    }
    return "?";
}

std::string_view normalization_name(Normalization n) { return n == Normalization::none ? "none" : "layernorm"; }

std::string_view loss_name(LossKind l) {
    switch (l) {
    case LossKind::cce: return "cce";
    case LossKind::mae: return "mae";
    case LossKind::mse: return "mse";
    case LossKind::huber: return "huber";
    }
    return "?";
}

MlpTask::MlpTask(std::shared_ptr<const Dataset> data, MlpArchitecture arch, std::size_t batch_size,
                 std::uint64_t seed, std::size_t valid_cap)
    : data_(std::move(data)), arch_(std::move(arch)), batch_size_(batch_size), seed_(seed) {
    if (!data_ || data_->size() == 0) throw std::invalid_argument("MlpTask: empty dataset");
    if (batch_size_ < 2) throw std::invalid_argument("MlpTask: batch size must be at least 2");
    if (arch_.loss == LossKind::cce && !data_->is_classification())
        throw std::invalid_argument("MlpTask: cce loss needs a classification dataset");
    if (data_->train_index.empty() || data_->valid_index.empty())
        throw std::invalid_argument("MlpTask: dataset has no train/valid split");
    valid_rows_ = data_->valid_index;
    if (valid_cap > 0 && valid_rows_.size() > valid_cap) valid_rows_.resize(valid_cap);
}

TensorList MlpTask::initial_params() const {
    Rng rng(derive_seed(seed_, init_stream));
    TensorList params;
    std::size_t in = data_->input_dim;
    auto add_affine = [&](std::size_t out) {
        Tensor w({out, in});
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        for (double& x : w.values) x = rng.uniform(-limit, limit);
        params.push_back(std::move(w));
        params.emplace_back(std::vector<std::size_t>{out}, 0.0);
    };
    for (std::size_t width : arch_.hidden) {
        add_affine(width);
        if (arch_.normalization == Normalization::layernorm) {
            params.emplace_back(std::vector<std::size_t>{width}, 1.0);
            params.emplace_back(std::vector<std::size_t>{width}, 0.0);
        }
        if (arch_.activation == Activation::prelu) params.emplace_back(std::vector<std::size_t>{width}, prelu_init);
        in = width;
    }
    add_affine(data_->output_dim());
    return params;
}

std::size_t MlpTask::parameter_count() const { return total_size(initial_params()); }

std::vector<std::size_t> MlpTask::batch_rows(std::size_t step) const {
    Rng rng(derive_seed(seed_, batch_stream, step));
    const auto& train = data_->train_index;
    std::vector<std::size_t> rows(batch_size_);
    for (auto& r : rows) r = train[rng.below(train.size())];
    return rows;
}

TrainStep MlpTask::forward_backward(const TensorList& params, std::span<const std::size_t> rows) const {
    const auto layers = layer_indices(arch_);
    if (params.size() != layers.back().bias + 1) throw std::invalid_argument("MlpTask: parameter list mismatch");
    const auto batch = static_cast<Eigen::Index>(rows.size());
    const auto din = static_cast<Eigen::Index>(data_->input_dim);

    Matrix act(din, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
        const auto row = data_->row(rows[static_cast<std::size_t>(b)]);
        act.col(b) = Eigen::Map<const Vector>(row.data(), din);
    }

    const double slope = fixed_slope(arch_.activation);
    std::vector<HiddenCache> caches(arch_.hidden.size());
    for (std::size_t l = 0; l < arch_.hidden.size(); ++l) {
        const auto& li = layers[l];
        auto& cache = caches[l];
        cache.input = act;
        Matrix z = weight_view(params[li.weight]) * act;
        z.colwise() += vec_view(params[li.bias]);
        if (arch_.normalization == Normalization::layernorm) {
            const Eigen::RowVectorXd mean = z.colwise().mean();
            z.rowwise() -= mean;
            const Eigen::RowVectorXd var = z.array().square().colwise().mean();
            cache.inv_std = (var.array() + layernorm_eps).rsqrt().transpose();
            cache.normed = z * cache.inv_std.asDiagonal();
            z = vec_view(params[li.gain]).asDiagonal() * cache.normed;
            z.colwise() += vec_view(params[li.shift]);
        }
        cache.pre_act = z;
        act.resize(z.rows(), z.cols());
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            const double s = arch_.activation == Activation::prelu ? params[li.slope].values[i] : slope;
            for (Eigen::Index b = 0; b < z.cols(); ++b) {
                const double y = z(i, b);
                if (y > 0.0) act(i, b) = y;
                else if (arch_.activation == Activation::elu) act(i, b) = elu_alpha * std::expm1(y);
                else act(i, b) = s * y;
            }
        }
    }
    const auto& out_li = layers.back();
    Matrix out = weight_view(params[out_li.weight]) * act;
    out.colwise() += vec_view(params[out_li.bias]);

    TrainStep result;
    Matrix grad_out;
    result.loss = output_loss(out, *data_, rows, arch_.loss, &grad_out);
    result.grads = zeros_like(params);

    store(result.grads[out_li.weight], Matrix(grad_out * act.transpose()));
    store(result.grads[out_li.bias], Vector(grad_out.rowwise().sum()));
    Matrix upstream = weight_view(params[out_li.weight]).transpose() * grad_out;

    for (std::size_t l = arch_.hidden.size(); l-- > 0;) {
        const auto& li = layers[l];
        const auto& cache = caches[l];
        Matrix d = upstream;
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            const double s = arch_.activation == Activation::prelu ? params[li.slope].values[i] : slope;
            double slope_grad = 0.0;
            for (Eigen::Index b = 0; b < d.cols(); ++b) {
                const double y = cache.pre_act(i, b);
                if (y > 0.0) continue;
                if (arch_.activation == Activation::elu) {
                    d(i, b) *= elu_alpha * std::exp(y);
                } else {
                    slope_grad += upstream(i, b) * y;
                    d(i, b) *= s;
                }
            }
            if (arch_.activation == Activation::prelu) result.grads[li.slope].values[i] = slope_grad;
        }
        if (arch_.normalization == Normalization::layernorm) {
            store(result.grads[li.gain], Vector((d.array() * cache.normed.array()).rowwise().sum()));
            store(result.grads[li.shift], Vector(d.rowwise().sum()));
            const Matrix dn = vec_view(params[li.gain]).asDiagonal() * d;
            const Eigen::RowVectorXd mean_dn = dn.colwise().mean();
            const Eigen::RowVectorXd mean_dn_n = (dn.array() * cache.normed.array()).colwise().mean();
            Matrix dz = dn;
            dz.rowwise() -= mean_dn;
            dz -= cache.normed * mean_dn_n.asDiagonal();
            d = dz * cache.inv_std.asDiagonal();
        }
        store(result.grads[li.weight], Matrix(d * cache.input.transpose()));
        store(result.grads[li.bias], Vector(d.rowwise().sum()));
        upstream = weight_view(params[li.weight]).transpose() * d;
    }
    return result;
}

double MlpTask::loss_on(const TensorList& params, std::span<const std::size_t> rows) const {
    return forward_backward(params, rows).loss;
}

TrainStep MlpTask::train_step(const TensorList& params, std::size_t step) const {
    const auto rows = batch_rows(step);
    return forward_backward(params, rows);
}

double MlpTask::validation_loss(const TensorList& params) const { return loss_on(params, valid_rows_); }

NoiseProbe MlpTask::noise_probe(const TensorList& params, std::size_t step, const TrainStep& step_result) const {
    const auto rows = batch_rows(step);
    const std::size_t first[] = {rows.front()};
    const TrainStep single = forward_backward(params, first);
    const double small = global_norm(single.grads);
    const double big = global_norm(step_result.grads);
    return {.small_norm_sq = small * small, .big_norm_sq = big * big, .small_batch = 1.0,
            .big_batch = static_cast<double>(batch_size_)};
}

std::string MlpTask::describe() const {
    std::ostringstream os;
    os << "mlp(data=" << data_->name << ", hidden=[";
    for (std::size_t i = 0; i < arch_.hidden.size(); ++i) os << (i ? "," : "") << arch_.hidden[i];
    os << "], act=" << activation_name(arch_.activation) << ", norm=" << normalization_name(arch_.normalization)
       << ", loss=" << loss_name(arch_.loss) << ", batch=" << batch_size_ << ", seed=" << seed_ << ")";
    return os.str();
}

} // namespace lhopt::tasks
