#include "lhopt/tasks/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lhopt/common/rng.hpp"

namespace lhopt::tasks {

void split_dataset(Dataset& data, double valid_fraction, std::uint64_t seed) {
    if (!(valid_fraction > 0.0 && valid_fraction < 1.0))
        throw std::invalid_argument("split_dataset: valid fraction must be in (0, 1)");
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0x73706c6974ULL));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const auto n_valid = static_cast<std::size_t>(std::llround(static_cast<double>(n) * valid_fraction));
    if (n_valid == 0 || n_valid >= n) throw std::invalid_argument("split_dataset: split leaves an empty side");
    data.valid_index.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_valid));
    data.train_index.assign(order.begin() + static_cast<std::ptrdiff_t>(n_valid), order.end());
    std::sort(data.valid_index.begin(), data.valid_index.end());
    std::sort(data.train_index.begin(), data.train_index.end());
}

Dataset make_synthetic_dataset(const SyntheticSpec& spec, std::vector<double>* weights_out) {
    if (spec.samples < 2 || spec.input_dim == 0 || spec.outputs == 0)
        throw std::invalid_argument("make_synthetic_dataset: empty dimensions");
    Rng rng(derive_seed(spec.seed, 0x73796e7468ULL));
    Dataset data;
    data.input_dim = spec.input_dim;
    data.inputs.resize(spec.samples * spec.input_dim);

    if (spec.kind == SyntheticKind::gaussian_blobs) {
        if (spec.outputs > spec.input_dim)
            throw std::invalid_argument("make_synthetic_dataset: blobs need input_dim >= classes");
        data.name = "blobs";
        data.num_classes = spec.outputs;
        // Orthonormal centre directions by Gram-Schmidt.
        std::vector<std::vector<double>> dirs;
        while (dirs.size() < spec.outputs) {
            std::vector<double> v(spec.input_dim);
            for (double& x : v) x = rng.normal();
            for (const auto& d : dirs) {
                const double p = std::inner_product(v.begin(), v.end(), d.begin(), 0.0);
                for (std::size_t j = 0; j < v.size(); ++j) v[j] -= p * d[j];
            }
            const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
            if (norm < 1e-8) continue;
            for (double& x : v) x /= norm;
            dirs.push_back(std::move(v));
        }
        const double radius = spec.separation / std::sqrt(2.0);
        data.labels.resize(spec.samples);
        for (std::size_t i = 0; i < spec.samples; ++i) {
            const auto c = static_cast<int>(i % spec.outputs);
            data.labels[i] = c;
            for (std::size_t j = 0; j < spec.input_dim; ++j)
                data.inputs[i * spec.input_dim + j] = radius * dirs[c][j] + rng.normal();
        }
    } else {
        data.name = "linear";
        data.target_dim = spec.outputs;
        std::vector<double> w(spec.input_dim * spec.outputs);
        for (double& x : w) x = rng.normal();
        data.targets.resize(spec.samples * spec.outputs);
        for (std::size_t i = 0; i < spec.samples; ++i) {
            for (std::size_t j = 0; j < spec.input_dim; ++j) data.inputs[i * spec.input_dim + j] = rng.normal();
            for (std::size_t k = 0; k < spec.outputs; ++k) {
                double y = 0.0;
                for (std::size_t j = 0; j < spec.input_dim; ++j)
                    y += data.inputs[i * spec.input_dim + j] * w[j * spec.outputs + k];
                data.targets[i * spec.outputs + k] = y + (spec.noise > 0.0 ? rng.normal(0.0, spec.noise) : 0.0);
            }
        }
        if (weights_out) *weights_out = w;
    }
    split_dataset(data, spec.valid_fraction, spec.seed);
    return data;
}

} // namespace lhopt::tasks
