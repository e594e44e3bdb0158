#pragma once

#include <array>
#include <string_view>

namespace lhopt::optim {

enum class DenominatorMode { adam, adamax };

/// Controllable inner-optimizer hyperparameters. Moving-average rates are
/// stored as 1 - beta so multiplicative actions stay inside (0, 1).
struct HyperParams {
    double learning_rate = 1e-3;
    double one_minus_beta1 = 0.1;
    double one_minus_beta2 = 1e-2;
    double epsilon = 1e-6;
    double weight_decay = 1e-2;
    double grad_clip_fraction = 0.8;
    double one_minus_beta_gradclip = 1e-2;
    DenominatorMode denominator_mode = DenominatorMode::adamax;
    bool use_lamb_trust = true;
    double lamb_min_trust = 1e-3;
    double one_minus_beta_lamb = 0.05;

    bool operator==(const HyperParams&) const = default;
};

/// Defaults of the inner optimizer before initial-value noise.
inline constexpr HyperParams initial_hyper_params() { return HyperParams{}; }

/// The eight real-valued hyperparameters that actions and noise address.
enum class HyperId {
    learning_rate,
    weight_decay,
    epsilon,
    one_minus_beta1,
    one_minus_beta2,
    grad_clip_fraction,
    one_minus_beta_gradclip,
    one_minus_beta_lamb,
};

inline constexpr std::array<HyperId, 8> all_hyper_ids = {
    HyperId::learning_rate,      HyperId::weight_decay,           HyperId::epsilon,
    HyperId::one_minus_beta1,    HyperId::one_minus_beta2,        HyperId::grad_clip_fraction,
    HyperId::one_minus_beta_gradclip, HyperId::one_minus_beta_lamb,
};

std::string_view hyper_name(HyperId id);
double& hyper_ref(HyperParams& h, HyperId id);
double hyper_value(const HyperParams& h, HyperId id);

std::string_view denominator_name(DenominatorMode mode);

} // namespace lhopt::optim
