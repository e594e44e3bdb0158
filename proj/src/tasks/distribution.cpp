#include "lhopt/tasks/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lhopt/common/rng.hpp"
#include "lhopt/tasks/idx.hpp"

namespace lhopt::tasks {

namespace {

constexpr std::uint64_t choice_stream = 0x7461736b2d636831ULL;
constexpr std::uint64_t task_stream = 0x7461736b2d736565ULL;

template <class T>
std::size_t index_of(const std::vector<T>& options, const T& value, const char* what) {
    const auto it = std::find(options.begin(), options.end(), value);
    if (it == options.end()) throw std::invalid_argument(std::string("task choice outside configured ") + what);
    return static_cast<std::size_t>(it - options.begin());
}

void one_hot(std::vector<double>& out, std::size_t width, std::size_t hot) {
    for (std::size_t i = 0; i < width; ++i) out.push_back(i == hot ? 1.0 : 0.0);
}

double unit_scale(double x, double lo, double hi) { return hi > lo ? (x - lo) / (hi - lo) : 0.0; }

void check_range(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("task distribution: invalid ") + what);
}

} // namespace

DistributionConfig nqm_only_config() {
    DistributionConfig cfg;
    cfg.nqm_weight = 1.0;
    return cfg;
}

std::vector<DatasetSource> builtin_datasets() {
    DatasetSource blobs;
    blobs.name = "blobs";
    blobs.spec = {.kind = SyntheticKind::gaussian_blobs, .samples = 512, .input_dim = 8, .outputs = 3,
                  .separation = 3.0, .noise = 0.0, .valid_fraction = 0.25, .seed = 11};
    DatasetSource linear;
    linear.name = "linear";
    linear.spec = {.kind = SyntheticKind::linear_regression, .samples = 512, .input_dim = 8, .outputs = 2,
                   .separation = 0.0, .noise = 0.1, .valid_fraction = 0.25, .seed = 12};
    return {blobs, linear};
}

TaskDistribution::TaskDistribution(DistributionConfig config) : config_(std::move(config)) {
    check_range(config_.nqm_weight >= 0.0 && config_.mlp_weight >= 0.0, "family weights");
    check_range(config_.nqm_weight + config_.mlp_weight > 0.0, "(empty) family weights");
    const auto& e = config_.episode;
    check_range(e.outer_min >= 1 && e.outer_max >= e.outer_min, "outer step range");
    check_range(e.inner_min >= 1 && e.inner_max >= e.inner_min, "inner step range");
    if (config_.nqm_weight > 0.0) {
        const auto& n = config_.nqm;
        check_range(n.dim_min >= 1 && n.dim_max >= n.dim_min, "nqm dimension range");
        check_range(n.kappa_min > 0.0 && n.kappa_max >= n.kappa_min, "nqm kappa range");
    }
    if (config_.mlp_weight > 0.0) {
        auto& m = config_.mlp;
        if (m.datasets.empty()) m.datasets = builtin_datasets();
        check_range(m.depth_min >= 0 && m.depth_max >= m.depth_min, "mlp depth range");
        check_range(!m.widths.empty() && !m.batch_sizes.empty(), "mlp widths or batch sizes");
        check_range(!m.activations.empty() && !m.normalizations.empty() && !m.losses.empty(), "mlp choice lists");
        for (const auto& src : m.datasets) {
            Dataset data = src.synthetic
                               ? make_synthetic_dataset(src.spec)
                               : load_idx_dataset(src.images, src.labels, src.valid_fraction, 0, src.max_samples);
            if (!src.name.empty()) data.name = src.name;
            datasets_.push_back(std::make_shared<const Dataset>(std::move(data)));
        }
    }
}

SampledTask TaskDistribution::sample(std::uint64_t seed) const {
    Rng rng(derive_seed(seed, choice_stream));
    TaskChoices c;
    const double total = config_.nqm_weight + config_.mlp_weight;
    c.family = rng.uniform() * total < config_.nqm_weight ? TaskFamily::nqm : TaskFamily::mlp;
    if (c.family == TaskFamily::nqm) {
        c.nqm_dim = rng.uniform_int(config_.nqm.dim_min, config_.nqm.dim_max);
        c.nqm_kappa = rng.log_uniform(config_.nqm.kappa_min, config_.nqm.kappa_max);
    } else {
        const auto& m = config_.mlp;
        c.dataset = rng.below(datasets_.size());
        const int depth = rng.uniform_int(m.depth_min, m.depth_max);
        for (int l = 0; l < depth; ++l) c.hidden.push_back(m.widths[rng.below(m.widths.size())]);
        c.activation = m.activations[rng.below(m.activations.size())];
        c.normalization = m.normalizations[rng.below(m.normalizations.size())];
        std::vector<LossKind> losses = m.losses;
        if (!datasets_[c.dataset]->is_classification())
            std::erase(losses, LossKind::cce);
        if (losses.empty()) throw std::invalid_argument("task distribution: no loss fits a regression dataset");
        c.loss = losses[rng.below(losses.size())];
        c.batch_size = m.batch_sizes[rng.below(m.batch_sizes.size())];
    }
    c.outer_steps = rng.uniform_int(config_.episode.outer_min, config_.episode.outer_max);
    c.inner_per_outer = rng.uniform_int(config_.episode.inner_min, config_.episode.inner_max);
    return build(c, seed);
}

SampledTask TaskDistribution::build(const TaskChoices& choices, std::uint64_t seed) const {
    SampledTask out;
    out.choices = choices;
    out.seed = seed;
    out.encoding = encode(choices);
    const std::uint64_t task_seed = derive_seed(seed, task_stream);
    if (choices.family == TaskFamily::nqm) {
        out.task = std::make_shared<NqmTask>(NqmTask::standard(choices.nqm_dim, choices.nqm_kappa, task_seed));
    } else {
        MlpArchitecture arch{choices.hidden, choices.activation, choices.normalization, choices.loss};
        out.task = std::make_shared<MlpTask>(datasets_.at(choices.dataset), std::move(arch), choices.batch_size,
                                             task_seed);
    }
    return out;
}

std::size_t TaskDistribution::encoding_width() const {
    std::size_t width = 2 + 2;
    if (config_.mlp_weight > 0.0) {
        const auto& m = config_.mlp;
        width += datasets_.size() + static_cast<std::size_t>(m.depth_max - m.depth_min + 1) +
                 static_cast<std::size_t>(m.depth_max) * m.widths.size() + m.activations.size() +
                 m.normalizations.size() + m.losses.size() + m.batch_sizes.size();
    }
    return width + 2;
}

std::vector<double> TaskDistribution::encode(const TaskChoices& c) const {
    std::vector<double> out;
    out.reserve(encoding_width());
    const bool nqm = c.family == TaskFamily::nqm;
    one_hot(out, 2, nqm ? 0 : 1);
    const auto& n = config_.nqm;
    out.push_back(nqm ? unit_scale(c.nqm_dim, n.dim_min, n.dim_max) : 0.0);
    out.push_back(nqm ? unit_scale(std::log(c.nqm_kappa), std::log(n.kappa_min), std::log(n.kappa_max)) : 0.0);

    if (config_.mlp_weight > 0.0) {
        const auto& m = config_.mlp;
        const std::size_t depths = static_cast<std::size_t>(m.depth_max - m.depth_min + 1);
        const std::size_t max_depth = static_cast<std::size_t>(m.depth_max);
        if (nqm) {
            out.resize(out.size() + datasets_.size() + depths + max_depth * m.widths.size() + m.activations.size() +
                           m.normalizations.size() + m.losses.size() + m.batch_sizes.size(),
                       0.0);
        } else {
            const int depth = static_cast<int>(c.hidden.size());
            if (depth < m.depth_min || depth > m.depth_max || c.dataset >= datasets_.size())
                throw std::invalid_argument("task choice outside configured depth or dataset range");
            one_hot(out, datasets_.size(), c.dataset);
            one_hot(out, depths, static_cast<std::size_t>(depth - m.depth_min));
            for (std::size_t l = 0; l < max_depth; ++l)
                one_hot(out, m.widths.size(),
                        l < c.hidden.size() ? index_of(m.widths, c.hidden[l], "widths") : m.widths.size());
            one_hot(out, m.activations.size(), index_of(m.activations, c.activation, "activations"));
            one_hot(out, m.normalizations.size(), index_of(m.normalizations, c.normalization, "normalizations"));
            one_hot(out, m.losses.size(), index_of(m.losses, c.loss, "losses"));
            one_hot(out, m.batch_sizes.size(), index_of(m.batch_sizes, c.batch_size, "batch sizes"));
        }
    }
    const auto& e = config_.episode;
    out.push_back(unit_scale(c.outer_steps, e.outer_min, e.outer_max));
    out.push_back(unit_scale(c.inner_per_outer, e.inner_min, e.inner_max));
    return out;
}

} // namespace lhopt::tasks
