#include "lhopt/policy/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lhopt/optim/adamw.hpp"

namespace lhopt::policy {

namespace {

constexpr std::uint64_t shuffle_stream = 0x70706f2d73687566ULL;

double clip_to_norm(std::vector<double>& g, double max_norm) {
    const double norm = l2_norm(g);
    if (max_norm > 0.0 && norm > max_norm)
        for (double& v : g) v *= max_norm / norm;
    return norm;
}

} // namespace

void PpoConfig::validate() const {
    if (!(clip > 0.0)) throw std::invalid_argument("ppo: clip must be positive");
    if (epochs < 1) throw std::invalid_argument("ppo: epochs must be at least 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("ppo: learning rate must be positive");
    if (max_reuse < 1 || max_reuse > 4) throw std::invalid_argument("ppo: environment reuse must be in [1, 4]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo: gamma must be in (0, 1]");
    if (entropy_coef < 0.0 || value_coef < 0.0 || max_grad_norm < 0.0)
        throw std::invalid_argument("ppo: coefficients must be nonnegative");
}

std::vector<double> returns_to_go(const Trajectory& trajectory, double gamma) {
    std::vector<double> out(trajectory.steps.size());
    double acc = 0.0;
    for (std::size_t t = out.size(); t-- > 0;) {
        acc = trajectory.steps[t].reward + gamma * acc;
        out[t] = acc;
    }
    return out;
}

std::size_t PreparedBatch::step_count() const {
    std::size_t n = 0;
    for (const auto* e : episodes) n += e->steps.size();
    return n;
}

PreparedBatch prepare_batch(std::span<const Trajectory* const> episodes, const PpoConfig& config) {
    PreparedBatch out;
    out.episodes.assign(episodes.begin(), episodes.end());
    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (const auto* e : episodes) {
        auto ret = returns_to_go(*e, config.gamma);
        std::vector<double> adv(ret.size());
        for (std::size_t t = 0; t < ret.size(); ++t) {
            adv[t] = ret[t] - e->steps[t].value;
            sum += adv[t];
            sum_sq += adv[t] * adv[t];
            ++n;
        }
        out.returns.push_back(std::move(ret));
        out.advantages.push_back(std::move(adv));
    }
    if (config.normalize_advantages && n > 1) {
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
        const double scale = 1.0 / (std::sqrt(var) + 1e-8);
        for (auto& adv : out.advantages)
            for (double& a : adv) a = (a - mean) * scale;
    }
    return out;
}

ObjectiveTerms ppo_objective(const Controller& controller, const PreparedBatch& batch, const PpoConfig& config,
                             ControllerGradients* grads, std::span<const std::size_t> episode_subset) {
    std::vector<std::size_t> all;
    if (episode_subset.empty()) {
        all.resize(batch.episodes.size());
        std::iota(all.begin(), all.end(), 0);
        episode_subset = all;
    }
    ObjectiveTerms terms;
    for (std::size_t e : episode_subset) terms.samples += batch.episodes.at(e)->steps.size();
    if (grads) {
        grads->policy.assign(controller.policy_net().params().size(), 0.0);
        grads->value.assign(controller.value_net().params().size(), 0.0);
    }
    if (terms.samples == 0) return terms;
    const double inv_n = 1.0 / static_cast<double>(terms.samples);

    std::size_t clipped = 0;
    for (std::size_t e : episode_subset) {
        const Trajectory& traj = *batch.episodes[e];
        LstmState ps = controller.initial_policy_state();
        LstmState vs = controller.initial_value_state();
        std::vector<LstmStepCache> pcache(grads ? traj.steps.size() : 0), vcache(grads ? traj.steps.size() : 0);
        std::vector<std::vector<double>> dlogits, dvalue;

        for (std::size_t t = 0; t < traj.steps.size(); ++t) {
            const auto& step = traj.steps[t];
            const double adv = batch.advantages[e][t];
            const double ret = batch.returns[e][t];
            const auto dists = controller.policy_step(step.policy_features, ps, grads ? &pcache[t] : nullptr);
            const double v = controller.value_step(step.value_features, vs, grads ? &vcache[t] : nullptr);

            const double logp = joint_log_prob(dists, step.actions);
            const double ratio = std::exp(logp - step.log_prob);
            const double clipped_ratio = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip);
            const double unclipped_obj = ratio * adv;
            const double clipped_obj = clipped_ratio * adv;
            const bool active = unclipped_obj <= clipped_obj;
            terms.policy_loss -= std::min(unclipped_obj, clipped_obj) * inv_n;
            if (std::abs(ratio - 1.0) > config.clip) ++clipped;
            terms.approx_kl += (step.log_prob - logp) * inv_n;
            terms.value_loss += 0.5 * (v - ret) * (v - ret) * inv_n;

            std::vector<double> dz;
            for (std::size_t h = 0; h < dists.size(); ++h) {
                const auto& p = dists[h];
                double head_entropy = 0.0;
                for (double q : p)
                    if (q > 0.0) head_entropy -= q * std::log(q);
                terms.entropy += head_entropy * inv_n;
                if (!grads) continue;
                for (std::size_t k = 0; k < p.size(); ++k) {
                    double g = 0.0;
                    if (active) {
                        const double onehot = static_cast<int>(k) == step.actions[h] ? 1.0 : 0.0;
                        g -= adv * ratio * (onehot - p[k]) * inv_n;
                    }
                    if (p[k] > 0.0) g += config.entropy_coef * p[k] * (std::log(p[k]) + head_entropy) * inv_n;
                    dz.push_back(g);
                }
            }
            if (grads) {
                dlogits.push_back(std::move(dz));
                dvalue.push_back({config.value_coef * (v - ret) * inv_n});
            }
        }
        if (grads) {
            controller.policy_net().backward(pcache, dlogits, grads->policy);
            controller.value_net().backward(vcache, dvalue, grads->value);
        }
    }
    terms.clip_fraction = static_cast<double>(clipped) * inv_n;
    terms.total = terms.policy_loss - config.entropy_coef * terms.entropy + config.value_coef * terms.value_loss;
    return terms;
}

PpoTrainer::PpoTrainer(PpoConfig config, std::uint64_t seed)
    : config_(std::move(config)), rng_(derive_seed(seed, shuffle_stream)) {
    config_.validate();
}

PpoDiagnostics PpoTrainer::update(Controller& controller, std::span<const Trajectory* const> episodes) {
    PpoDiagnostics diag;
    const PreparedBatch batch = prepare_batch(episodes, config_);
    if (batch.step_count() == 0) return diag;
    auto& pp = controller.policy_net().params();
    auto& vp = controller.value_net().params();
    if (policy_m_.size() != pp.size()) {
        policy_m_.assign(pp.size(), 0.0);
        policy_v_.assign(pp.size(), 0.0);
        policy_step_ = 0;
    }
    if (value_m_.size() != vp.size()) {
        value_m_.assign(vp.size(), 0.0);
        value_v_.assign(vp.size(), 0.0);
        value_step_ = 0;
    }
    const optim::AdamWHypers adam{.learning_rate = config_.learning_rate, .beta1 = 0.9, .beta2 = 0.999,
                                  .epsilon = 1e-8, .weight_decay = 0.0};

    std::vector<std::size_t> order(batch.episodes.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t mb = config_.minibatch_episodes == 0 ? order.size() : config_.minibatch_episodes;

    double grad_norm_sum = 0.0;
    bool first = true;
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
        if (mb < order.size())
            for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng_.below(i)]);
        for (std::size_t start = 0; start < order.size(); start += mb) {
            const std::span<const std::size_t> subset(order.data() + start, std::min(mb, order.size() - start));
            ControllerGradients g;
            const ObjectiveTerms terms = ppo_objective(controller, batch, config_, &g, subset);
            if (first) {
                // Diagnostics describe the batch under the pre-update weights.
                diag.policy_loss = terms.policy_loss;
                diag.value_loss = terms.value_loss;
                diag.entropy = terms.entropy;
                first = false;
            }
            if (!std::isfinite(terms.total) || !all_finite(g.policy) || !all_finite(g.value)) {
                ++diag.steps_skipped;
                continue;
            }
            grad_norm_sum += clip_to_norm(g.policy, config_.max_grad_norm);
            clip_to_norm(g.value, config_.max_grad_norm);
            optim::adamw_step(pp, g.policy, adam, policy_m_, policy_v_, policy_step_);
            optim::adamw_step(vp, g.value, adam, value_m_, value_v_, value_step_);
            ++diag.steps_taken;
        }
    }
    const ObjectiveTerms after = ppo_objective(controller, batch, config_, nullptr);
    diag.clip_fraction = after.clip_fraction;
    diag.approx_kl = after.approx_kl;
    diag.samples = after.samples;
    diag.grad_norm = diag.steps_taken > 0 ? grad_norm_sum / diag.steps_taken : 0.0;
    diag.skipped = diag.steps_taken == 0;
    return diag;
}

RolloutBuffer::RolloutBuffer(int max_reuse, std::size_t capacity) : max_reuse_(max_reuse), capacity_(capacity) {
    if (max_reuse < 1 || max_reuse > 4) throw std::invalid_argument("RolloutBuffer: reuse must be in [1, 4]");
}

void RolloutBuffer::add(Trajectory trajectory) {
    entries_.push_back({std::move(trajectory), 0});
    ++added_;
    if (capacity_ > 0 && entries_.size() > capacity_) entries_.erase(entries_.begin());
}

std::vector<Trajectory> RolloutBuffer::take_batch() {
    std::vector<Trajectory> out;
    out.reserve(entries_.size());
    for (auto& e : entries_) {
        ++e.uses;
        if (e.uses > max_reuse_) throw std::logic_error("RolloutBuffer: reuse limit exceeded");
        max_uses_observed_ = std::max(max_uses_observed_, e.uses);
        out.push_back(e.trajectory);
    }
    std::erase_if(entries_, [&](const Entry& e) { return e.uses >= max_reuse_; });
    return out;
}

} // namespace lhopt::policy
