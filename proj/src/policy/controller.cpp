#include "lhopt/policy/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lhopt::policy {

namespace {

constexpr std::uint64_t policy_init_stream = 0x706f6c6963792d69ULL;
constexpr std::uint64_t value_init_stream = 0x76616c75652d696eULL;
constexpr double value_head_gain = 1.0;

void check_input(std::span<const double> x, std::size_t width) {
    if (x.size() != width)
        throw std::invalid_argument("controller: feature width " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(width));
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("controller: non-finite feature");
}

} // namespace

HeadDistributions head_softmax(std::span<const double> logits, std::span<const std::size_t> arities) {
    HeadDistributions out;
    std::size_t offset = 0;
    for (std::size_t n : arities) {
        if (offset + n > logits.size()) throw std::invalid_argument("head_softmax: logits shorter than arities");
        const auto head = logits.subspan(offset, n);
        const double mx = *std::max_element(head.begin(), head.end());
        std::vector<double> p(n);
        double z = 0.0;
        for (std::size_t k = 0; k < n; ++k) z += p[k] = std::exp(head[k] - mx);
        for (double& v : p) v /= z;
        out.push_back(std::move(p));
        offset += n;
    }
    if (offset != logits.size()) throw std::invalid_argument("head_softmax: logits longer than arities");
    return out;
}

std::vector<int> sample_actions(const HeadDistributions& dists, Rng& rng) {
    std::vector<int> out;
    for (const auto& p : dists) {
        const double u = rng.uniform();
        double acc = 0.0;
        int choice = static_cast<int>(p.size()) - 1;
        for (std::size_t k = 0; k < p.size(); ++k) {
            acc += p[k];
            if (u < acc) {
                choice = static_cast<int>(k);
                break;
            }
        }
        out.push_back(choice);
    }
    return out;
}

std::vector<int> greedy_actions(const HeadDistributions& dists) {
    std::vector<int> out;
    for (const auto& p : dists) out.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
    return out;
}

double joint_log_prob(const HeadDistributions& dists, std::span<const int> actions) {
    if (actions.size() != dists.size()) throw std::invalid_argument("joint_log_prob: one action per head required");
    double lp = 0.0;
    for (std::size_t h = 0; h < dists.size(); ++h) lp += std::log(dists[h].at(static_cast<std::size_t>(actions[h])));
    return lp;
}

double joint_entropy(const HeadDistributions& dists) {
    double e = 0.0;
    for (const auto& p : dists)
        for (double v : p)
            if (v > 0.0) e -= v * std::log(v);
    return e;
}

Controller::Controller(features::FeatureLayout layout, std::size_t hidden, std::uint64_t seed)
    : layout_(std::move(layout)) {
    policy_ = LstmNetwork::initialized({layout_.policy_width(), hidden, layout_.head_arities},
                                       derive_seed(seed, policy_init_stream));
    value_ = LstmNetwork::initialized({layout_.value_width(), hidden, {1}}, derive_seed(seed, value_init_stream),
                                      value_head_gain);
    policy_norm_ = features::NormalizerBank(layout_.policy_width());
    value_norm_ = features::NormalizerBank(layout_.value_width());
}

Controller::Controller(features::FeatureLayout layout, LstmNetwork policy, LstmNetwork value)
    : layout_(std::move(layout)), policy_(std::move(policy)), value_(std::move(value)),
      policy_norm_(layout_.policy_width()), value_norm_(layout_.value_width()) {
    if (policy_.shape().outputs != layout_.head_arities || policy_.shape().input != layout_.policy_width())
        throw std::invalid_argument("controller: policy network does not match the feature layout");
    if (value_.shape().outputs != std::vector<std::size_t>{1} || value_.shape().input != layout_.value_width())
        throw std::invalid_argument("controller: value network does not match the feature layout");
}

HeadDistributions Controller::policy_step(std::span<const double> features, LstmState& state,
                                          LstmStepCache* cache) const {
    check_input(features, layout_.policy_width());
    const auto logits = policy_.step(features, state, cache);
    return head_softmax(logits, layout_.head_arities);
}

double Controller::value_step(std::span<const double> features, LstmState& state, LstmStepCache* cache) const {
    check_input(features, layout_.value_width());
    return value_.step(features, state, cache)[0];
}

} // namespace lhopt::policy
