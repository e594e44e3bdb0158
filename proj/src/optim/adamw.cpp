#include "lhopt/optim/adamw.hpp"

#include <cmath>
#include <stdexcept>

namespace lhopt::optim {

namespace {

bool update_tensor(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                   std::vector<double>& v, const AdamWHypers& h, std::uint64_t t) {
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
    std::vector<double> m_new(p.size()), v_new(p.size()), p_new(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
        m_new[j] = h.beta1 * m[j] + (1.0 - h.beta1) * g[j];
        v_new[j] = h.beta2 * v[j] + (1.0 - h.beta2) * g[j] * g[j];
        const double denom = std::sqrt(v_new[j] / c2) + h.epsilon;
        const double u = denom > 0.0 ? (m_new[j] / c1) / denom : 0.0;
        p_new[j] = p[j] * (1.0 - h.learning_rate * h.weight_decay) - h.learning_rate * u;
        if (!std::isfinite(p_new[j])) return false;
    }
    p.swap(p_new);
    m.swap(m_new);
    v.swap(v_new);
    return true;
}

} // namespace

AdamWState::AdamWState(const TensorList& params) {
    for (const auto& p : params) {
        m.emplace_back(p.size(), 0.0);
        v.emplace_back(p.size(), 0.0);
    }
}

bool adamw_step(TensorList& params, const TensorList& grads, const AdamWHypers& h, AdamWState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw std::invalid_argument("adamw_step: params, grads and state disagree on tensor count");
    ++state.step;
    bool ok = true;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].size() != params[i].size()) throw std::invalid_argument("adamw_step: tensor shape mismatch");
        ok &= update_tensor(params[i].values, grads[i].values, state.m[i], state.v[i], h, state.step);
    }
    return ok;
}

bool adamw_step(std::vector<double>& params, const std::vector<double>& grads, const AdamWHypers& h,
                std::vector<double>& m, std::vector<double>& v, std::uint64_t& step) {
    if (grads.size() != params.size()) throw std::invalid_argument("adamw_step: size mismatch");
    if (m.size() != params.size()) m.assign(params.size(), 0.0);
    if (v.size() != params.size()) v.assign(params.size(), 0.0);
    ++step;
    return update_tensor(params, grads, m, v, h, step);
}

} // namespace lhopt::optim
