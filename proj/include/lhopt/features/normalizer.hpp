#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lhopt::features {

inline constexpr double normalizer_beta = 0.999;
inline constexpr double feature_clip = 2.0;

/// Exponential moving mean/variance of one feature channel, with outputs
/// z-scored and clipped to [-2, 2].
struct NormalizerState {
    double ema_mean = 0.0;
    double ema_var = 0.0;
    bool initialized = false;

    /// Folds x into the statistics. Non-finite x is ignored (returns false).
    bool observe(double x);
    /// Clipped z-score under the current statistics; 0 for non-finite x or
    /// before any observation.
    double normalize(double x) const;
    /// observe() then normalize(); the first observation maps to 0.
    double observe_and_normalize(double x);

    bool operator==(const NormalizerState&) const = default;
};

/// One NormalizerState per element of a fixed-length feature vector.
class NormalizerBank {
public:
    NormalizerBank() = default;
    explicit NormalizerBank(std::size_t width) : states_(width) {}

    std::size_t width() const noexcept { return states_.size(); }
    void observe(std::span<const double> raw);
    std::vector<double> normalize(std::span<const double> raw) const;

    std::vector<NormalizerState>& states() noexcept { return states_; }
    const std::vector<NormalizerState>& states() const noexcept { return states_; }

    bool operator==(const NormalizerBank&) const = default;

private:
    std::vector<NormalizerState> states_;
};

} // namespace lhopt::features
