#include "lhopt/actions/action_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lhopt/common/math.hpp"

namespace lhopt::actions {

namespace {

std::size_t index_of(HyperId id) { return static_cast<std::size_t>(id); }

} // namespace

ActionHead default_head(HyperId id) {
    switch (id) {
    case HyperId::learning_rate: return {id, ActionType::scale, {0.5, 0.707, 0.9, 1.0, 1.1, 1.414, 2.0}};
    case HyperId::weight_decay:
    case HyperId::epsilon:
    case HyperId::one_minus_beta1:
    case HyperId::one_minus_beta2: return {id, ActionType::scale, {0.5, 2.0}};
    case HyperId::grad_clip_fraction: return {id, ActionType::logit_shift, {-1.0, -0.3, 0.3, 1.0}};
    case HyperId::one_minus_beta_gradclip: return {id, ActionType::scale, {0.5, 1.0, 2.0}};
    case HyperId::one_minus_beta_lamb: return {id, ActionType::scale, {1.0 / 1.5, 1.0, 1.5}};
    }
    throw std::logic_error("unknown HyperId");
}

Bounds noise_range(HyperId id) {
    switch (id) {
    case HyperId::learning_rate: return {1e-2, 1e2};
    case HyperId::weight_decay:
    case HyperId::epsilon:
    case HyperId::one_minus_beta1:
    case HyperId::one_minus_beta2: return {0.1, 10.0};
    case HyperId::grad_clip_fraction: return {-1.0, 1.0};
    case HyperId::one_minus_beta_gradclip:
    case HyperId::one_minus_beta_lamb: return {0.5, 2.0};
    }
    throw std::logic_error("unknown HyperId");
}

std::vector<std::size_t> ActionSpace::arities() const {
    std::vector<std::size_t> out;
    for (const auto& h : heads) out.push_back(h.arity());
    if (restart_head) out.push_back(restart_arity);
    return out;
}

std::vector<std::string> ActionSpace::hyper_names() const {
    std::vector<std::string> out;
    for (const auto& h : heads) out.emplace_back(optim::hyper_name(h.target));
    return out;
}

ActionSpace ActionSpace::full() {
    ActionSpace space;
    for (HyperId id : optim::all_hyper_ids) space.heads.push_back(default_head(id));
    space.restart_head = true;
    return space;
}

ActionSpace ActionSpace::reduced() {
    ActionSpace space;
    space.heads = {default_head(HyperId::learning_rate), default_head(HyperId::grad_clip_fraction)};
    space.restart_head = false;
    return space;
}

ActionSpace ActionSpace::from_names(const std::vector<std::string>& names, bool restart) {
    ActionSpace space;
    for (const auto& name : names) {
        const auto it = std::find_if(optim::all_hyper_ids.begin(), optim::all_hyper_ids.end(),
                                     [&](HyperId id) { return optim::hyper_name(id) == name; });
        if (it == optim::all_hyper_ids.end()) throw std::invalid_argument("unknown hyperparameter head: " + name);
        space.heads.push_back(default_head(*it));
    }
    space.restart_head = restart;
    return space;
}

HyperParams HyperBounds::clamp(HyperParams h) const {
    for (HyperId id : optim::all_hyper_ids) {
        double& v = optim::hyper_ref(h, id);
        const Bounds& b = (*this)[id];
        v = std::isnan(v) ? b.min : std::clamp(v, b.min, b.max);
    }
    return h;
}

bool HyperBounds::contains(const HyperParams& h) const {
    for (HyperId id : optim::all_hyper_ids) {
        const double v = optim::hyper_value(h, id);
        const Bounds& b = (*this)[id];
        if (!(v >= b.min && v <= b.max)) return false;
    }
    return true;
}

HyperParams apply_action(const HyperParams& h, const ActionHead& head, std::size_t choice, const HyperBounds& bounds) {
    if (choice >= head.values.size()) throw std::out_of_range("apply_action: choice outside head arity");
    HyperParams out = h;
    double& v = optim::hyper_ref(out, head.target);
    const double c = head.values[choice];
    if (head.type == ActionType::scale) {
        v *= c;
    } else {
        const Bounds& b = bounds[head.target];
        v = sigmoid(logit(std::clamp(v, b.min, b.max)) + c);
    }
    return bounds.clamp(out);
}

std::vector<double> InitialNoise::encode() const {
    std::vector<double> out(draws.size());
    for (HyperId id : optim::all_hyper_ids) {
        const std::size_t i = index_of(id);
        out[i] = id == HyperId::grad_clip_fraction ? draws[i] : std::log(draws[i]);
    }
    return out;
}

InitialNoise sample_initial_noise(Rng& rng) {
    InitialNoise noise;
    for (HyperId id : optim::all_hyper_ids) {
        const Bounds r = noise_range(id);
        const std::size_t i = index_of(id);
        noise.draws[i] = id == HyperId::grad_clip_fraction ? rng.uniform(r.min, r.max) : rng.log_uniform(r.min, r.max);
    }
    return noise;
}

HyperParams apply_initial_noise(const HyperParams& base, const InitialNoise& noise, const HyperBounds& bounds) {
    HyperParams out = base;
    for (HyperId id : optim::all_hyper_ids) {
        double& v = optim::hyper_ref(out, id);
        const double d = noise.draws[index_of(id)];
        if (id == HyperId::grad_clip_fraction) {
            if (d != 0.0) v = sigmoid(logit(v) + d);
        } else {
            v *= d;
        }
    }
    return bounds.clamp(out);
}

} // namespace lhopt::actions
