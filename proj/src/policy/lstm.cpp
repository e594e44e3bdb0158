#include "lhopt/policy/lstm.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "lhopt/common/math.hpp"
#include "lhopt/common/rng.hpp"

namespace lhopt::policy {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using ConstMat = Eigen::Map<const RowMajor>;
using ConstVec = Eigen::Map<const Vector>;

struct Offsets {
    std::size_t wx, wh, b, wout, bout;
};

Offsets offsets(const LstmShape& s) {
    const std::size_t g = 4 * s.hidden;
    Offsets o{};
    o.wx = 0;
    o.wh = o.wx + g * s.input;
    o.b = o.wh + g * s.hidden;
    o.wout = o.b + g;
    o.bout = o.wout + s.output_width() * s.hidden;
    return o;
}

template <class P>
auto mat(P* base, std::size_t offset, std::size_t rows, std::size_t cols) {
    using M = std::conditional_t<std::is_const_v<P>, Eigen::Map<const RowMajor>, Eigen::Map<RowMajor>>;
    return M(base + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <class P>
auto vec(P* base, std::size_t offset, std::size_t n) {
    using V = std::conditional_t<std::is_const_v<P>, Eigen::Map<const Vector>, Eigen::Map<Vector>>;
    return V(base + offset, static_cast<Eigen::Index>(n));
}

ConstVec view(const std::vector<double>& v) { return {v.data(), static_cast<Eigen::Index>(v.size())}; }

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

std::size_t LstmShape::output_width() const { return std::accumulate(outputs.begin(), outputs.end(), std::size_t{0}); }

std::size_t LstmShape::parameter_count() const {
    const std::size_t g = 4 * hidden;
    return g * input + g * hidden + g + output_width() * hidden + output_width();
}

LstmNetwork::LstmNetwork(LstmShape shape, std::vector<double> params)
    : shape_(std::move(shape)), params_(std::move(params)) {
    if (shape_.hidden == 0 || shape_.input == 0) throw std::invalid_argument("LstmNetwork: empty shape");
    if (params_.size() != shape_.parameter_count())
        throw std::invalid_argument("LstmNetwork: parameter count does not match shape");
}

LstmNetwork LstmNetwork::initialized(LstmShape shape, std::uint64_t seed, double head_gain) {
    std::vector<double> p(shape.parameter_count(), 0.0);
    const Offsets off = offsets(shape);
    const std::size_t H = shape.hidden, D = shape.input, O = shape.output_width();
    Rng rng(seed);

    const double in_limit = std::sqrt(3.0 / static_cast<double>(D));
    for (std::size_t k = off.wx; k < off.wh; ++k) p[k] = rng.uniform(-in_limit, in_limit);

    for (std::size_t gate = 0; gate < 4; ++gate) {
        Eigen::MatrixXd a(H, H);
        for (Eigen::Index r = 0; r < a.rows(); ++r)
            for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = rng.normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(H, H);
        // Sign fix makes the draw uniform over orthogonal matrices.
        for (Eigen::Index c = 0; c < q.cols(); ++c)
            if (qr.matrixQR()(c, c) < 0.0) q.col(c) *= -1.0;
        mat(p.data(), off.wh + gate * H * H, H, H) = q;
    }
    for (std::size_t k = 0; k < H; ++k) p[off.b + H + k] = 1.0;

    const double out_limit = head_gain * std::sqrt(3.0 / static_cast<double>(H));
    for (std::size_t k = off.wout; k < off.wout + O * H; ++k) p[k] = rng.uniform(-out_limit, out_limit);
    return LstmNetwork(std::move(shape), std::move(p));
}

LstmState LstmNetwork::initial_state() const {
    return {std::vector<double>(shape_.hidden, 0.0), std::vector<double>(shape_.hidden, 0.0)};
}

std::vector<double> LstmNetwork::step(std::span<const double> x, LstmState& state, LstmStepCache* cache) const {
    if (x.size() != shape_.input) throw std::invalid_argument("LstmNetwork: input width mismatch");
    const std::size_t H = shape_.hidden, D = shape_.input, O = shape_.output_width();
    const Offsets off = offsets(shape_);
    const double* p = params_.data();

    const ConstVec xv(x.data(), static_cast<Eigen::Index>(D));
    const Vector pre = mat(p, off.wx, 4 * H, D) * xv + mat(p, off.wh, 4 * H, H) * view(state.h) + vec(p, off.b, 4 * H);
    const auto h_n = static_cast<Eigen::Index>(H);
    const Vector i = pre.segment(0, h_n).unaryExpr([](double v) { return sigmoid(v); });
    const Vector f = pre.segment(h_n, h_n).unaryExpr([](double v) { return sigmoid(v); });
    const Vector g = pre.segment(2 * h_n, h_n).array().tanh();
    const Vector o = pre.segment(3 * h_n, h_n).unaryExpr([](double v) { return sigmoid(v); });
    const Vector c = f.cwiseProduct(view(state.c)) + i.cwiseProduct(g);
    const Vector tc = c.array().tanh();
    const Vector h = o.cwiseProduct(tc);
    const Vector y = mat(p, off.wout, O, H) * h + vec(p, off.bout, O);

    if (cache) {
        cache->x.assign(x.begin(), x.end());
        cache->h_prev = state.h;
        cache->c_prev = state.c;
        cache->i = to_std(i);
        cache->f = to_std(f);
        cache->g = to_std(g);
        cache->o = to_std(o);
        cache->c = to_std(c);
        cache->tanh_c = to_std(tc);
        cache->h = to_std(h);
    }
    state.h = to_std(h);
    state.c = to_std(c);
    return to_std(y);
}

void LstmNetwork::backward(const std::vector<LstmStepCache>& caches, const std::vector<std::vector<double>>& d_outputs,
                           std::span<double> grad) const {
    if (caches.size() != d_outputs.size()) throw std::invalid_argument("LstmNetwork: cache/gradient length mismatch");
    if (grad.size() != params_.size()) throw std::invalid_argument("LstmNetwork: gradient size mismatch");
    const std::size_t H = shape_.hidden, D = shape_.input, O = shape_.output_width();
    const Offsets off = offsets(shape_);
    const double* p = params_.data();
    double* gp = grad.data();
    const auto h_n = static_cast<Eigen::Index>(H);

    auto dwx = mat(gp, off.wx, 4 * H, D);
    auto dwh = mat(gp, off.wh, 4 * H, H);
    auto db = vec(gp, off.b, 4 * H);
    auto dwout = mat(gp, off.wout, O, H);
    auto dbout = vec(gp, off.bout, O);

    Vector dh_next = Vector::Zero(h_n);
    Vector dc_next = Vector::Zero(h_n);
    Vector da(4 * h_n);
    for (std::size_t t = caches.size(); t-- > 0;) {
        const auto& k = caches[t];
        if (d_outputs[t].size() != O) throw std::invalid_argument("LstmNetwork: output gradient width mismatch");
        const ConstVec dy = view(d_outputs[t]);
        const ConstVec h = view(k.h), i = view(k.i), f = view(k.f), g = view(k.g), o = view(k.o);
        const ConstVec tc = view(k.tanh_c);

        dwout.noalias() += dy * h.transpose();
        dbout += dy;
        const Vector dh = mat(p, off.wout, O, H).transpose() * dy + dh_next;
        const Vector d_o = dh.cwiseProduct(tc);
        const Vector dc = dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix()) + dc_next;
        da.segment(0, h_n) = dc.cwiseProduct(g).cwiseProduct(i.cwiseProduct((1.0 - i.array()).matrix()));
        da.segment(h_n, h_n) =
            dc.cwiseProduct(view(k.c_prev)).cwiseProduct(f.cwiseProduct((1.0 - f.array()).matrix()));
        da.segment(2 * h_n, h_n) = dc.cwiseProduct(i).cwiseProduct((1.0 - g.array().square()).matrix());
        da.segment(3 * h_n, h_n) = d_o.cwiseProduct(o.cwiseProduct((1.0 - o.array()).matrix()));
        dc_next = dc.cwiseProduct(f);

        dwx.noalias() += da * view(k.x).transpose();
        dwh.noalias() += da * view(k.h_prev).transpose();
        db += da;
        dh_next = mat(p, off.wh, 4 * H, H).transpose() * da;
    }
}

} // namespace lhopt::policy
