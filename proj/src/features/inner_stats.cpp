#include "lhopt/features/inner_stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lhopt/features/similarity.hpp"

namespace lhopt::features {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

constexpr std::array<std::string_view, inner_channel_count> channel_names = {
    "fraction_clipped",   "fraction_denom_ge_eps",       "mean_abs_prelr_update",
    "log_update_param",   "log_noise_scale",             "log_trust_ratio",
    "cos_grad_momentum",  "logit_cdf_cos_grad_momentum", "cos_grad_update",
    "logit_cdf_cos_grad_update", "cos_grad_param",       "cdf_cos_grad_param",
};

std::size_t idx(InnerChannel c) { return static_cast<std::size_t>(c); }

} // namespace

std::string_view inner_channel_name(std::size_t channel) { return channel_names.at(channel); }

InnerValues inner_step_values(const optim::StepStats& stats, std::optional<double> noise_scale) {
    InnerValues v;
    v.fill(nan);
    v[idx(InnerChannel::fraction_clipped)] = stats.fraction_clipped;

    std::size_t live = 0;
    double log_trust = 0.0, cgm = 0.0, lcgm = 0.0, cgu = 0.0, lcgu = 0.0, cgp = 0.0, ccgp = 0.0;
    for (const auto& t : stats.tensors) {
        if (t.skipped || t.elements == 0) continue;
        ++live;
        log_trust += std::log(t.trust_ratio);
        cgm += t.cos_grad_momentum;
        lcgm += logit_cdf_cosine(cdf_cosine_from(t.cos_grad_momentum, t.elements));
        cgu += t.cos_grad_update;
        lcgu += logit_cdf_cosine(cdf_cosine_from(t.cos_grad_update, t.elements));
        cgp += t.cos_grad_param;
        ccgp += cdf_cosine_from(t.cos_grad_param, t.elements);
    }
    if (live > 0) {
        const double n = static_cast<double>(live);
        v[idx(InnerChannel::fraction_denom_ge_eps)] = stats.fraction_denom_ge_eps;
        v[idx(InnerChannel::mean_abs_prelr_update)] = stats.mean_abs_prelr_update;
        v[idx(InnerChannel::log_trust_ratio)] = log_trust / n;
        v[idx(InnerChannel::cos_grad_momentum)] = cgm / n;
        v[idx(InnerChannel::logit_cdf_cos_grad_momentum)] = lcgm / n;
        v[idx(InnerChannel::cos_grad_update)] = cgu / n;
        v[idx(InnerChannel::logit_cdf_cos_grad_update)] = lcgu / n;
        v[idx(InnerChannel::cos_grad_param)] = cgp / n;
        v[idx(InnerChannel::cdf_cos_grad_param)] = ccgp / n;
    }
    if (stats.param_norm > 0.0 && stats.update_norm > 0.0)
        v[idx(InnerChannel::log_update_param_ratio)] = std::log(stats.update_norm / stats.param_norm);
    if (noise_scale && *noise_scale > 0.0) v[idx(InnerChannel::log_noise_scale)] = std::log(*noise_scale);
    return v;
}

InnerStatsAccumulator::InnerStatsAccumulator(std::size_t cadence) : cadence_(cadence) {
    if (cadence_ == 0) throw std::invalid_argument("InnerStatsAccumulator: cadence must be positive");
}

bool InnerStatsAccumulator::accumulate(const optim::StepStats& stats, std::size_t step_index,
                                       std::optional<double> noise_scale) {
    if (!should_sample(step_index)) return false;
    add(inner_step_values(stats, noise_scale));
    return true;
}

void InnerStatsAccumulator::add(const InnerValues& values) {
    ++samples_;
    for (std::size_t c = 0; c < inner_channel_count; ++c) {
        if (!std::isfinite(values[c])) continue;
        sums_[c] += values[c];
        ++counts_[c];
    }
}

InnerValues InnerStatsAccumulator::means() const {
    InnerValues out;
    for (std::size_t c = 0; c < inner_channel_count; ++c)
        out[c] = counts_[c] > 0 ? sums_[c] / static_cast<double>(counts_[c]) : nan;
    return out;
}

void InnerStatsAccumulator::reset() {
    samples_ = 0;
    sums_.fill(0.0);
    counts_.fill(0);
}

} // namespace lhopt::features
