#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "lhopt/common/rng.hpp"
#include "lhopt/tasks/distribution.hpp"
#include "lhopt/tasks/idx.hpp"
#include "support/oracles.hpp"

using namespace lhopt;
using namespace lhopt::tasks;

namespace {

std::vector<std::uint8_t> be32(std::uint32_t v) {
    return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 8),
            static_cast<std::uint8_t>(v)};
}

std::vector<std::uint8_t> idx_bytes(std::uint32_t magic, const std::vector<std::uint32_t>& dims,
                                    const std::vector<std::uint8_t>& data) {
    auto out = be32(magic);
    for (auto d : dims) {
        const auto b = be32(d);
        out.insert(out.end(), b.begin(), b.end());
    }
    out.insert(out.end(), data.begin(), data.end());
    return out;
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string choice_key(const TaskChoices& c) {
    std::ostringstream s;
    s.precision(17);
    s << static_cast<int>(c.family) << ' ' << c.nqm_dim << ' ' << c.nqm_kappa << ' ' << c.dataset << ' '
      << static_cast<int>(c.activation) << ' ' << static_cast<int>(c.normalization) << ' '
      << static_cast<int>(c.loss) << ' ' << c.batch_size << ' ' << c.outer_steps << ' ' << c.inner_per_outer;
    for (auto h : c.hidden) s << ' ' << h;
    return s.str();
}

std::vector<double> flatten(const TensorList& t) {
    std::vector<double> out;
    for (const auto& x : t) out.insert(out.end(), x.values.begin(), x.values.end());
    return out;
}

TensorList unflatten(const TensorList& like, const std::vector<double>& flat) {
    TensorList out = like;
    std::size_t k = 0;
    for (auto& t : out)
        for (double& v : t.values) v = flat[k++];
    return out;
}

} // namespace

TEST_SUITE("tasks") {

TEST_CASE("nqm hand example") {
    NqmTask task({1.0, 0.5}, {0.0, 0.0}, {2.0, 2.0}, 1);
    Rng rng(0);
    const std::vector<double> theta{2.0, 2.0};
    const auto lg = nqm_loss_and_grad(task, theta, rng);
    CHECK(lg.loss == 3.0);
    CHECK(lg.grad == std::vector<double>{2.0, 1.0});

    const std::vector<double> zero{0.0, 0.0};
    const auto z = nqm_loss_and_grad(task, zero, rng);
    CHECK(z.loss == 0.0);
    CHECK(z.grad == std::vector<double>{0.0, 0.0});
}

TEST_CASE("nqm gradient is unbiased") {
    const auto task = NqmTask::standard(5, 0.7, 3);
    const std::vector<double> theta{1.0, -2.0, 0.5, 3.0, -1.0};
    Rng rng(9);
    const int n = 100000;
    std::vector<double> mean(theta.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        const auto g = task.sample_gradient(theta, rng);
        for (std::size_t j = 0; j < g.size(); ++j) mean[j] += g[j] / n;
    }
    for (std::size_t j = 0; j < theta.size(); ++j) {
        const double h = task.curvature()[j];
        const double se = h * task.noise_std()[j] / std::sqrt(static_cast<double>(n));
        CHECK(std::abs(mean[j] - h * theta[j]) < 3.0 * se);
    }
}

TEST_CASE("nqm standard parameterization") {
    const auto task = NqmTask::standard(10, 0.5, 1);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(task.curvature()[i] == doctest::Approx(1.0 / static_cast<double>(i + 1)));
        CHECK(task.noise_std()[i] == doctest::Approx(0.5 * std::sqrt(1.0 / static_cast<double>(i + 1))));
    }
    Rng rng(4);
    for (int s = 0; s < 200; ++s) {
        const auto t = NqmTask::sample(rng.next_u64(), NqmRanges{});
        CHECK(t.dim() >= 10);
        CHECK(t.dim() <= 100);
        CHECK(t.kappa() >= 0.1);
        CHECK(t.kappa() <= 1.0);
    }
}

TEST_CASE("zero network with zero data has zero loss and gradient") {
    auto data = std::make_shared<Dataset>();
    data->input_dim = 3;
    data->inputs.assign(4 * 3, 0.0);
    data->target_dim = 2;
    data->targets.assign(4 * 2, 0.0);
    data->train_index = {0, 1, 2};
    data->valid_index = {3};
    MlpTask task(data, {{5}, Activation::relu, Normalization::none, LossKind::mse}, 4, 0);
    auto params = zeros_like(task.initial_params());
    const std::vector<std::size_t> rows{0, 1, 2, 3};
    const auto step = task.forward_backward(params, rows);
    CHECK(step.loss == 0.0);
    for (const auto& g : step.grads)
        for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("cce with uniform logits equals log k") {
    SyntheticSpec spec;
    spec.outputs = 5;
    spec.samples = 40;
    auto data = std::make_shared<Dataset>(make_synthetic_dataset(spec));
    MlpTask task(data, {{4}, Activation::elu, Normalization::none, LossKind::cce}, 8, 0);
    auto params = task.initial_params();
    params[2].values.assign(params[2].size(), 0.0); // output weights
    params[3].values.assign(params[3].size(), 0.0); // output bias
    const auto rows = task.batch_rows(0);
    CHECK(task.loss_on(params, rows) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
}

TEST_CASE("mlp gradients match finite differences for every combination") {
    SyntheticSpec cls;
    cls.samples = 48;
    cls.input_dim = 4;
    cls.outputs = 3;
    cls.seed = 2;
    auto blobs = std::make_shared<Dataset>(make_synthetic_dataset(cls));
    SyntheticSpec reg = cls;
    reg.kind = SyntheticKind::linear_regression;
    reg.outputs = 2;
    auto linear = std::make_shared<Dataset>(make_synthetic_dataset(reg));

    int checked = 0;
    for (auto act : all_activations)
        for (auto norm : all_normalizations)
            for (auto loss : all_losses) {
                CAPTURE(activation_name(act));
                CAPTURE(normalization_name(norm));
                CAPTURE(loss_name(loss));
                const auto data = loss == LossKind::cce ? blobs : linear;
                MlpTask task(data, {{5, 4}, act, norm, loss}, 8, 11);
                auto params = task.initial_params();
                Rng rng(7);
                for (auto& t : params)
                    for (double& v : t.values) v += 0.1 * rng.normal();
                const auto rows = task.batch_rows(3);
                const auto analytic = flatten(task.forward_backward(params, rows).grads);
                const auto numeric = oracle::numeric_gradient(
                    [&](const std::vector<double>& x) { return task.loss_on(unflatten(params, x), rows); },
                    flatten(params), 1e-5);
                CHECK(oracle::max_relative_error(analytic, numeric) < 1e-4);
                ++checked;
            }
    CHECK(checked == 40);
}

TEST_CASE("non-finite activations give a NaN loss") {
    SyntheticSpec spec;
    auto data = std::make_shared<Dataset>(make_synthetic_dataset(spec));
    MlpTask task(data, {{4}, Activation::relu, Normalization::none, LossKind::cce}, 8, 0);
    auto params = task.initial_params();
    params[0].values[0] = std::numeric_limits<double>::infinity();
    CHECK_NOTHROW(task.forward_backward(params, task.batch_rows(0)));
    CHECK(std::isnan(task.forward_backward(params, task.batch_rows(0)).loss));
}

TEST_CASE("idx fixtures") {
    const std::vector<std::uint8_t> pixels{0, 255, 51, 102, 1, 2, 3, 4};
    const auto images = idx_bytes(idx_image_magic, {2, 2, 2}, pixels);
    const auto arr = parse_idx(images, idx_image_magic, "fixture");
    CHECK(arr.dims == std::vector<std::uint32_t>{2, 2, 2});
    CHECK(arr.data == pixels);

    const auto dir = std::filesystem::temp_directory_path() / "lhopt_idx_fixture";
    std::filesystem::create_directories(dir);
    write_bytes(dir / "images", images);
    write_bytes(dir / "labels", idx_bytes(idx_label_magic, {2}, {7, 3}));
    const auto data = load_idx_dataset(dir / "images", dir / "labels", 0.5, 1);
    CHECK(data.input_dim == 4);
    CHECK(data.size() == 2);
    CHECK(data.labels == std::vector<int>{7, 3});
    for (std::size_t i = 0; i < pixels.size(); ++i) CHECK(data.inputs[i] == pixels[i] / 255.0);
    CHECK(data.train_index.size() + data.valid_index.size() == 2);

    try {
        parse_idx({0, 0, 8, 3, 0, 0}, idx_image_magic, "short");
        FAIL("expected a parse error");
    } catch (const IdxParseError& e) {
        CHECK(std::string(e.what()).find("dimension 0") != std::string::npos);
    }
    try {
        parse_idx(idx_bytes(idx_label_magic, {2}, {1, 2}), idx_image_magic, "swapped");
        FAIL("expected a parse error");
    } catch (const IdxParseError& e) {
        CHECK(std::string(e.what()).find("type mismatch") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_idx({0, 0}, idx_image_magic, "tiny"), IdxParseError);
    CHECK_THROWS_AS(parse_idx(idx_bytes(idx_image_magic, {2, 2, 2}, {1, 2, 3}), idx_image_magic, "cut"), IdxParseError);
    CHECK_THROWS_AS(read_idx_file(dir / "missing", idx_image_magic), IdxParseError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("blobs are linearly separable") {
    SyntheticSpec spec;
    spec.outputs = 2;
    spec.separation = 10.0;
    spec.samples = 400;
    const auto data = make_synthetic_dataset(spec);
    Eigen::VectorXd mean[2] = {Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(8)};
    int count[2] = {0, 0};
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = data.row(i);
        mean[data.labels[i]] += Eigen::Map<const Eigen::VectorXd>(r.data(), 8);
        ++count[data.labels[i]];
    }
    mean[0] /= count[0];
    mean[1] /= count[1];
    const Eigen::VectorXd w = mean[1] - mean[0];
    const double threshold = w.dot(mean[0] + mean[1]) / 2.0;
    int correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = data.row(i);
        const int predicted = w.dot(Eigen::Map<const Eigen::VectorXd>(r.data(), 8)) > threshold ? 1 : 0;
        correct += predicted == data.labels[i];
    }
    CHECK(correct == static_cast<int>(data.size()));
}

TEST_CASE("noiseless regression recovers the generating weights") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::linear_regression;
    spec.noise = 0.0;
    spec.outputs = 2;
    std::vector<double> weights;
    const auto data = make_synthetic_dataset(spec, &weights);
    const auto n = static_cast<Eigen::Index>(data.size());
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
        data.inputs.data(), n, 8);
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> y(
        data.targets.data(), n, 2);
    const Eigen::MatrixXd fitted = x.colPivHouseholderQr().solve(Eigen::MatrixXd(y));
    for (Eigen::Index i = 0; i < 8; ++i)
        for (Eigen::Index j = 0; j < 2; ++j)
            CHECK(fitted(i, j) == doctest::Approx(weights[static_cast<std::size_t>(i * 2 + j)]).epsilon(1e-10));
}

TEST_CASE("datasets and splits are deterministic and disjoint") {
    SyntheticSpec spec;
    spec.seed = 5;
    const auto a = make_synthetic_dataset(spec);
    const auto b = make_synthetic_dataset(spec);
    CHECK(a.inputs == b.inputs);
    CHECK(a.labels == b.labels);
    CHECK(a.train_index == b.train_index);
    std::set<std::size_t> train(a.train_index.begin(), a.train_index.end());
    for (auto v : a.valid_index) CHECK(train.count(v) == 0);
    CHECK(a.valid_index.size() == 128);
    CHECK(a.train_index.size() + a.valid_index.size() == a.size());
}

TEST_CASE("task sampling is reproducible") {
    DistributionConfig cfg;
    cfg.nqm_weight = 0.5;
    cfg.mlp_weight = 0.5;
    const TaskDistribution dist(cfg);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = dist.sample(seed);
        const auto b = dist.sample(seed);
        CHECK(choice_key(a.choices) == choice_key(b.choices));
        CHECK(a.encoding == b.encoding);
        const auto pa = a.task->initial_params();
        CHECK(pa == b.task->initial_params());
        CHECK(a.task->train_step(pa, 3).grads == b.task->train_step(pa, 3).grads);
        CHECK(a.task->validation_loss(pa) == b.task->validation_loss(pa));
    }
}

TEST_CASE("nqm-only config samples only nqm tasks") {
    const TaskDistribution dist(nqm_only_config());
    for (std::uint64_t seed = 0; seed < 200; ++seed) CHECK(dist.sample(seed).task->family() == TaskFamily::nqm);
}

TEST_CASE("family frequencies follow the weights") {
    DistributionConfig cfg;
    cfg.nqm_weight = 0.2;
    cfg.mlp_weight = 0.8;
    const TaskDistribution dist(cfg);
    int mlp = 0;
    const int n = 10000;
    std::map<std::string, std::string> choices_by_encoding;
    bool injective = true;
    for (int s = 0; s < n; ++s) {
        const auto t = dist.sample(static_cast<std::uint64_t>(s));
        mlp += t.choices.family == TaskFamily::mlp;
        CHECK(t.encoding.size() == dist.encoding_width());
        std::ostringstream enc;
        enc.precision(17);
        for (double v : t.encoding) enc << v << ',';
        const auto [it, inserted] = choices_by_encoding.emplace(enc.str(), choice_key(t.choices));
        if (!inserted && it->second != choice_key(t.choices)) injective = false;
    }
    CHECK(std::abs(mlp / static_cast<double>(n) - 0.8) < 0.02);
    CHECK(injective);
}

TEST_CASE("build inverts sampling") {
    DistributionConfig cfg;
    cfg.nqm_weight = 0.5;
    cfg.mlp_weight = 0.5;
    const TaskDistribution dist(cfg);
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto a = dist.sample(seed);
        const auto b = dist.build(a.choices, seed);
        CHECK(b.encoding == a.encoding);
        CHECK(b.task->describe() == a.task->describe());
    }
}

TEST_CASE("empty configs are rejected") {
    CHECK_THROWS_AS(TaskDistribution{DistributionConfig{}}, std::invalid_argument);
    DistributionConfig bad = nqm_only_config();
    bad.nqm.kappa_min = 0.0;
    CHECK_THROWS_AS(TaskDistribution{bad}, std::invalid_argument);
    DistributionConfig no_widths;
    no_widths.mlp_weight = 1.0;
    no_widths.mlp.widths.clear();
    CHECK_THROWS_AS(TaskDistribution{no_widths}, std::invalid_argument);
}

} // TEST_SUITE
