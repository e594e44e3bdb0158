#include "lhopt/features/normalizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lhopt::features {

bool NormalizerState::observe(double x) {
    if (!std::isfinite(x)) return false;
    if (!initialized) {
        ema_mean = x;
        ema_var = 0.0;
        initialized = true;
        return true;
    }
    const double alpha = 1.0 - normalizer_beta;
    const double delta = x - ema_mean;
    ema_mean += alpha * delta;
    ema_var = normalizer_beta * (ema_var + alpha * delta * delta);
    return true;
}

double NormalizerState::normalize(double x) const {
    if (!initialized || !std::isfinite(x)) return 0.0;
    const double diff = x - ema_mean;
    if (!(ema_var > 0.0)) {
        if (diff == 0.0) return 0.0;
        return diff > 0.0 ? feature_clip : -feature_clip;
    }
    const double z = diff / std::sqrt(ema_var);
    if (std::isnan(z)) return 0.0;
    return std::clamp(z, -feature_clip, feature_clip);
}

double NormalizerState::observe_and_normalize(double x) {
    if (!observe(x)) return 0.0;
    return normalize(x);
}

void NormalizerBank::observe(std::span<const double> raw) {
    if (raw.size() != states_.size()) throw std::invalid_argument("NormalizerBank: width mismatch");
    for (std::size_t i = 0; i < raw.size(); ++i) states_[i].observe(raw[i]);
}

std::vector<double> NormalizerBank::normalize(std::span<const double> raw) const {
    if (raw.size() != states_.size()) throw std::invalid_argument("NormalizerBank: width mismatch");
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = states_[i].normalize(raw[i]);
    return out;
}

} // namespace lhopt::features
