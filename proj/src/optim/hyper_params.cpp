#include "lhopt/optim/hyper_params.hpp"

#include <stdexcept>

namespace lhopt::optim {

std::string_view hyper_name(HyperId id) {
    switch (id) {
    case HyperId::learning_rate: return "learning_rate";
    case HyperId::weight_decay: return "weight_decay";
    case HyperId::epsilon: return "epsilon";
    case HyperId::one_minus_beta1: return "one_minus_beta1";
    case HyperId::one_minus_beta2: return "one_minus_beta2";
    case HyperId::grad_clip_fraction: return "grad_clip_fraction";
    case HyperId::one_minus_beta_gradclip: return "one_minus_beta_gradclip";
    case HyperId::one_minus_beta_lamb: return "one_minus_beta_lamb";
    }
    throw std::logic_error("unknown HyperId");
}

double& hyper_ref(HyperParams& h, HyperId id) {
    switch (id) {
    case HyperId::learning_rate: return h.learning_rate;
    case HyperId::weight_decay: return h.weight_decay;
    case HyperId::epsilon: return h.epsilon;
    case HyperId::one_minus_beta1: return h.one_minus_beta1;
    case HyperId::one_minus_beta2: return h.one_minus_beta2;
    case HyperId::grad_clip_fraction: return h.grad_clip_fraction;
    case HyperId::one_minus_beta_gradclip: return h.one_minus_beta_gradclip;
    case HyperId::one_minus_beta_lamb: return h.one_minus_beta_lamb;
    }
    throw std::logic_error("unknown HyperId");
}

double hyper_value(const HyperParams& h, HyperId id) { return hyper_ref(const_cast<HyperParams&>(h), id); }

std::string_view denominator_name(DenominatorMode mode) {
    return mode == DenominatorMode::adam ? "adam" : "adamax";
}

} // namespace lhopt::optim
