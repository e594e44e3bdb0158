#include "lhopt/features/integral_cdf.hpp"

#include <cmath>
#include <stdexcept>

#include "lhopt/common/math.hpp"

namespace lhopt::features {

std::array<double, 3> exp_moment_integrals(double c) {
    // sum_k c^k / k! / (j + k + 1)
    std::array<double, 3> out{0.0, 0.0, 0.0};
    double term = 1.0; // c^k / k!
    for (int k = 0; k < 200; ++k) {
        bool converged = true;
        for (int j = 0; j < 3; ++j) {
            const double add = term / static_cast<double>(j + k + 1);
            out[j] += add;
            if (std::abs(add) > 1e-18 * std::abs(out[j])) converged = false;
        }
        if (converged && k > 2) break;
        term *= c / static_cast<double>(k + 1);
    }
    return out;
}

IntegralCdf::IntegralCdf(std::vector<double> bases) : bases_(std::move(bases)), acc_(bases_.size()) {
    for (double b : bases_)
        if (!(b > 0.0)) throw std::invalid_argument("IntegralCdf: bases must be positive");
}

bool IntegralCdf::observe(double y, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("IntegralCdf: progress outside [0, 1]");
    if (count_ > 0 && !(t > t_prev_)) throw std::invalid_argument("IntegralCdf: progress must strictly increase");
    if (!std::isfinite(y)) return false;

    if (count_ == 0) {
        y_ref_ = y;
    } else {
        const double dt = t - t_prev_;
        const double y0 = y_prev_ - y_ref_;
        const double slope = (y - y_ref_) - y0;
        for (std::size_t k = 0; k < bases_.size(); ++k) {
            const double rate = std::log(bases_[k]);
            const auto I = exp_moment_integrals(rate * dt);
            const double scale = dt * std::exp(rate * t_prev_);
            auto& a = acc_[k];
            a.mass += scale * I[0];
            a.sum += scale * (y0 * I[0] + slope * I[1]);
            a.sum_sq += scale * (y0 * y0 * I[0] + 2.0 * y0 * slope * I[1] + slope * slope * I[2]);
        }
    }
    y_prev_ = y;
    t_prev_ = t;
    ++count_;
    return true;
}

double IntegralCdf::weight_mass(std::size_t k) const { return acc_.at(k).mass; }

double IntegralCdf::mean(std::size_t k) const {
    const auto& a = acc_.at(k);
    if (count_ == 0) return 0.0;
    if (a.mass <= 0.0) return y_prev_;
    return y_ref_ + a.sum / a.mass;
}

double IntegralCdf::variance(std::size_t k) const {
    const auto& a = acc_.at(k);
    if (a.mass <= 0.0) return 0.0;
    const double m = a.sum / a.mass;
    return std::max(a.sum_sq / a.mass - m * m, 0.0);
}

double IntegralCdf::cdf(std::size_t k, double y) const {
    if (count_ == 0) return 0.5;
    const double mu = mean(k);
    const double var = variance(k);
    if (var <= 0.0) {
        if (y > mu) return 1.0;
        if (y < mu) return 0.0;
        return 0.5;
    }
    // z-score taken relative to the reference point to keep precision.
    const auto& a = acc_[k];
    const double z = ((y - y_ref_) - a.sum / a.mass) / std::sqrt(var);
    return normal_cdf(z);
}

std::vector<double> IntegralCdf::cdf_all(double y) const {
    std::vector<double> out(bases_.size());
    for (std::size_t k = 0; k < bases_.size(); ++k) out[k] = cdf(k, y);
    return out;
}

std::vector<double> IntegralCdf::rank_then_observe(double y, double t) {
    std::vector<double> out = std::isfinite(y) ? cdf_all(y) : std::vector<double>(bases_.size(), 0.5);
    observe(y, t);
    return out;
}

} // namespace lhopt::features
