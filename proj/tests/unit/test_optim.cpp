#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "lhopt/common/rng.hpp"
#include "lhopt/optim/adamw.hpp"
#include "lhopt/optim/ciao.hpp"
#include "lhopt/optim/schedules.hpp"
#include "support/oracles.hpp"

using namespace lhopt;
using namespace lhopt::optim;

namespace {

HyperParams adamw_like(double lr, double b1, double b2, double eps, double wd) {
    HyperParams h;
    h.learning_rate = lr;
    h.one_minus_beta1 = 1.0 - b1;
    h.one_minus_beta2 = 1.0 - b2;
    h.epsilon = eps;
    h.weight_decay = wd;
    h.grad_clip_fraction = 0.99;
    h.one_minus_beta_gradclip = 1e-4;
    h.denominator_mode = DenominatorMode::adam;
    h.use_lamb_trust = false;
    return h;
}

/// Moving maximum so large that clipping never engages.
void disable_clipping(InnerState& state) {
    for (auto& s : state.slots) s.gradclip_moving_max = 1e300;
}

TensorList random_tensors(Rng& rng, std::initializer_list<std::size_t> sizes) {
    TensorList out;
    for (auto n : sizes) {
        Tensor t({n});
        for (double& v : t.values) v = rng.normal();
        out.push_back(std::move(t));
    }
    return out;
}

double angle(std::span<const double> a, std::span<const double> b) {
    const double c = std::clamp(dot(a, b) / (l2_norm(a) * l2_norm(b)), -1.0, 1.0);
    // acos loses precision near 1; the half-angle form does not.
    std::vector<double> diff(a.size());
    const double na = l2_norm(a), nb = l2_norm(b);
    for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] / na - b[i] / nb;
    return c > 0.5 ? 2.0 * std::asin(l2_norm(diff) / 2.0) : std::acos(c);
}

} // namespace

TEST_SUITE("optim") {

TEST_CASE("clip recurrence follows the hand evaluation") {
    HyperParams h;
    h.grad_clip_fraction = 0.8;
    h.one_minus_beta_gradclip = 0.1;
    TensorSlotState slot(2);

    std::vector<double> g1 = {6.0, 8.0};
    auto r1 = clip_gradient(g1, slot, h);
    CHECK(slot.gradclip_moving_max == doctest::Approx(10.0));
    CHECK(r1.was_clipped);
    CHECK(l2_norm(g1) == doctest::Approx(8.0).epsilon(1e-14));

    std::vector<double> g2 = {0.6, 0.8};
    auto r2 = clip_gradient(g2, slot, h);
    CHECK(slot.gradclip_moving_max == doctest::Approx(9.0));
    CHECK_FALSE(r2.was_clipped);
    CHECK(g2[0] == 0.6);
    CHECK(g2[1] == 0.8);

    std::vector<double> zero = {0.0, 0.0};
    auto r3 = clip_gradient(zero, slot, h);
    CHECK_FALSE(r3.was_clipped);
    CHECK(zero[0] == 0.0);
}

TEST_CASE("non-finite gradient is zeroed and flagged") {
    HyperParams h;
    TensorSlotState slot(2);
    std::vector<double> g = {1.0, std::numeric_limits<double>::quiet_NaN()};
    auto r = clip_gradient(g, slot, h);
    CHECK(r.was_clipped);
    CHECK(r.non_finite);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);

    TensorList p = {Tensor({2}, 1.0)};
    TensorList grads = {Tensor({2})};
    grads[0].values = {std::numeric_limits<double>::infinity(), 0.0};
    InnerState state(p);
    const auto stats = ciao_step(p, grads, h, state);
    CHECK(stats.non_finite);
    CHECK(stats.tensors[0].skipped);
    CHECK(p[0].values == std::vector<double>{1.0, 1.0});
}

TEST_CASE("post-clip norm never exceeds the threshold") {
    Rng rng(3);
    HyperParams h;
    h.grad_clip_fraction = 0.6;
    h.one_minus_beta_gradclip = 0.05;
    TensorSlotState slot(5);
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> g(5);
        const double scale = std::exp(rng.uniform(-5.0, 5.0));
        for (double& v : g) v = scale * rng.normal();
        clip_gradient(g, slot, h);
        CHECK(l2_norm(g) <= h.grad_clip_fraction * slot.gradclip_moving_max * (1.0 + 1e-12));
    }
}

TEST_CASE("moving max is nondecreasing under identical gradients") {
    HyperParams h;
    h.one_minus_beta_gradclip = 0.3;
    TensorSlotState slot(3);
    double previous = 0.0;
    for (int i = 0; i < 50; ++i) {
        std::vector<double> g = {1.0, -2.0, 0.5};
        clip_gradient(g, slot, h);
        CHECK(slot.gradclip_moving_max >= previous);
        previous = slot.gradclip_moving_max;
    }
}

TEST_CASE("adamax accumulator recurrence") {
    HyperParams h;
    h.denominator_mode = DenominatorMode::adamax;
    h.one_minus_beta2 = 0.5;
    h.use_lamb_trust = false;
    TensorList p = {Tensor({1}, 0.0)};
    InnerState state(p);
    disable_clipping(state);
    ciao_step(p, {Tensor({1}, 1.0)}, h, state);
    CHECK(state.slots[0].second_accumulator[0] == 1.0);
    ciao_step(p, {Tensor({1}, 0.25)}, h, state);
    CHECK(state.slots[0].second_accumulator[0] == 0.5);
}

TEST_CASE("AdamW-equivalent configuration matches a hand-computed step") {
    const std::vector<double> p0 = {0.3, -1.2, 2.5};
    const std::vector<double> g = {0.1, -0.4, 2.0};
    const auto h = adamw_like(1e-2, 0.9, 0.999, 1e-8, 0.1);
    TensorList p = {Tensor({3})};
    p[0].values = p0;
    InnerState state(p);
    disable_clipping(state);
    TensorList grads = {Tensor({3})};
    grads[0].values = g;
    ciao_step(p, grads, h, state);

    // One step from zero moments: m_hat = g, v_hat = g^2.
    for (std::size_t i = 0; i < 3; ++i) {
        const double expected = p0[i] - 1e-2 * 0.1 * p0[i] - 1e-2 * g[i] / (std::abs(g[i]) + 1e-8);
        CHECK(oracle::relative_diff(p[0].values[i], expected) <= 1e-12);
    }
}

TEST_CASE("adamw_step matches the reference and its trivial cases") {
    SUBCASE("zero gradient, no decay") {
        TensorList p = {Tensor({3}, 1.5)};
        AdamWState s(p);
        adamw_step(p, {Tensor({3}, 0.0)}, {.learning_rate = 0.1, .weight_decay = 0.0}, s);
        CHECK(p[0].values == std::vector<double>{1.5, 1.5, 1.5});
    }
    SUBCASE("decay only") {
        TensorList p = {Tensor({2}, 2.0)};
        AdamWState s(p);
        adamw_step(p, {Tensor({2}, 0.0)}, {.learning_rate = 0.1, .weight_decay = 0.5}, s);
        CHECK(p[0].values[0] == doctest::Approx(2.0 * (1.0 - 0.05)).epsilon(1e-15));
    }
    SUBCASE("random five-element tensor") {
        Rng rng(11);
        TensorList p = random_tensors(rng, {5});
        std::vector<double> ref = p[0].values;
        AdamWState s(p);
        oracle::AdamWReference oracle_adamw(5, 3e-3, 0.9, 0.999, 1e-8, 1e-2);
        for (int step = 0; step < 10; ++step) {
            TensorList g = random_tensors(rng, {5});
            adamw_step(p, g, {.learning_rate = 3e-3}, s);
            oracle_adamw.step(ref, g[0].values);
        }
        for (std::size_t i = 0; i < 5; ++i) CHECK(oracle::relative_diff(p[0].values[i], ref[i]) <= 1e-12);
    }
}

TEST_CASE("CIAO reduces to AdamW over 1000 random steps") {
    Rng rng(2024);
    TensorList ciao_p = random_tensors(rng, {7, 3});
    TensorList adamw_p = ciao_p;
    const auto h = adamw_like(1e-3, 0.9, 0.999, 1e-8, 1e-2);
    InnerState state(ciao_p);
    disable_clipping(state);
    AdamWState astate(adamw_p);
    for (int step = 0; step < 1000; ++step) {
        TensorList g = random_tensors(rng, {7, 3});
        ciao_step(ciao_p, g, h, state);
        adamw_step(adamw_p, g, {.learning_rate = 1e-3}, astate);
    }
    double worst = 0.0;
    for (std::size_t t = 0; t < ciao_p.size(); ++t)
        for (std::size_t i = 0; i < ciao_p[t].size(); ++i)
            worst = std::max(worst, oracle::relative_diff(ciao_p[t].values[i], adamw_p[t].values[i]));
    CHECK(worst <= 1e-9);
}

TEST_CASE("huge epsilon with trust ratio approaches the LARS direction") {
    Rng rng(5);
    HyperParams h;
    h.epsilon = 1e12;
    h.use_lamb_trust = true;
    h.weight_decay = 0.0;
    h.one_minus_beta1 = 1.0 - 1e-12; // momentum off so the update follows this step's gradient
    TensorList p = random_tensors(rng, {10, 4});
    InnerState state(p);
    disable_clipping(state);
    const TensorList before = p;
    const TensorList g = random_tensors(rng, {10, 4});
    ciao_step(p, g, h, state);
    for (std::size_t t = 0; t < p.size(); ++t) {
        std::vector<double> delta(p[t].size()), neg_g(p[t].size());
        for (std::size_t i = 0; i < delta.size(); ++i) {
            delta[i] = p[t].values[i] - before[t].values[i];
            neg_g[i] = -g[t].values[i];
        }
        CHECK(angle(delta, neg_g) < 1e-6);
    }
}

TEST_CASE("trust ratio respects its floor and the zero-norm rule") {
    Rng rng(8);
    HyperParams h;
    h.lamb_min_trust = 0.5;
    TensorList p = random_tensors(rng, {6});
    p.push_back(Tensor({4}, 0.0));
    InnerState state(p);
    for (int i = 0; i < 20; ++i) {
        const auto stats = ciao_step(p, random_tensors(rng, {6, 4}), h, state);
        CHECK(stats.tensors[0].trust_ratio >= 0.5);
        if (i == 0) CHECK(stats.tensors[1].trust_ratio == 1.0);
    }
}

TEST_CASE("gradient-scale invariance with zero epsilon") {
    for (double c : {1e-3, 1e3}) {
        Rng rng(77);
        TensorList a = random_tensors(rng, {9, 4});
        TensorList b = a;
        HyperParams h;
        h.epsilon = 0.0;
        for (auto mode : {DenominatorMode::adam, DenominatorMode::adamax}) {
            h.denominator_mode = mode;
            TensorList pa = a, pb = b;
            InnerState sa(pa), sb(pb);
            Rng grng(99);
            for (int step = 0; step < 100; ++step) {
                TensorList g = random_tensors(grng, {9, 4});
                TensorList gc = g;
                for (auto& t : gc)
                    for (double& v : t.values) v *= c;
                ciao_step(pa, g, h, sa);
                ciao_step(pb, gc, h, sb);
            }
            double worst = 0.0;
            for (std::size_t t = 0; t < pa.size(); ++t)
                for (std::size_t i = 0; i < pa[t].size(); ++i)
                    worst = std::max(worst, oracle::relative_diff(pa[t].values[i], pb[t].values[i]));
            CHECK(worst <= 1e-9);
        }
    }
}

TEST_CASE("step statistics") {
    HyperParams h;
    h.use_lamb_trust = false;
    h.epsilon = 1e-30;
    TensorList p = {Tensor({4}, 1.0)};
    InnerState state(p);
    disable_clipping(state);
    const auto stats = ciao_step(p, {Tensor({4}, 0.5)}, h, state);
    CHECK(stats.fraction_clipped == 0.0);
    CHECK(stats.fraction_denom_ge_eps == 1.0);
    CHECK(stats.param_norm == doctest::Approx(2.0));
    CHECK(stats.mean_abs_prelr_update == doctest::Approx(1.0));
}

TEST_CASE("schedules") {
    CHECK(schedule_value(ScheduleKind::constant, 1e-3, 0.7) == 1e-3);
    CHECK(schedule_value(ScheduleKind::cosine_to_zero, 1e-3, 1.0) == doctest::Approx(0.0));
    CHECK(schedule_value(ScheduleKind::cosine_to_tenth, 1e-3, 1.0) == doctest::Approx(1e-4));
    CHECK(schedule_value(ScheduleKind::cosine_to_zero, 1e-3, 0.5) == doctest::Approx(5e-4));
    CHECK(schedule_value(ScheduleKind::linear, 1e-3, 0.25) == doctest::Approx(7.5e-4));
    CHECK(schedule_value(ScheduleKind::quadratic, 1e-3, 0.5) == doctest::Approx(2.5e-4));
    CHECK(schedule_value(ScheduleKind::exponential, 1e-3, 1.0) == doctest::Approx(1e-5));
    CHECK(schedule_value(ScheduleKind::multistep, 1e-3, 0.5) == doctest::Approx(1e-4));
    CHECK(schedule_value(ScheduleKind::multistep, 1e-3, 0.9) == doctest::Approx(1e-5));
    CHECK_THROWS_AS(schedule_value(ScheduleKind::linear, 1e-3, 1.5), std::domain_error);
    CHECK_THROWS_AS(schedule_value(ScheduleKind::linear, 1e-3, -0.1), std::domain_error);

    const auto grid = baseline_grid();
    CHECK(grid.size() == 35);
    for (auto kind : all_schedule_kinds)
        for (double lr : baseline_learning_rates)
            CHECK(std::count_if(grid.begin(), grid.end(), [&](const BaselineSpec& s) {
                      return s.schedule == kind && s.base_lr == lr;
                  }) == 1);
}

} // TEST_SUITE
