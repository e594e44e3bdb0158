#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lhopt/policy/checkpoint_io.hpp"
#include "lhopt/policy/ppo.hpp"
#include "support/oracles.hpp"

using namespace lhopt;
using namespace lhopt::policy;

namespace {

features::FeatureLayout reduced_layout() {
    features::FeatureLayout l;
    l.head_arities = {7, 4};
    l.hyper_names = {"learning_rate", "grad_clip_fraction"};
    l.task_encoding_width = 3;
    l.initial_noise_width = 2;
    return l;
}

features::FeatureLayout bandit_layout() {
    features::FeatureLayout l;
    l.head_arities = {2};
    l.hyper_names = {"learning_rate"};
    return l;
}

std::vector<double> random_vector(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-2.0, 2.0);
    return v;
}

/// Episode generated by the controller itself, with old log-probabilities
/// shifted by up to `shift` so that ratios differ from 1.
Trajectory rollout(const Controller& c, std::size_t steps, Rng& rng, double shift) {
    Trajectory traj;
    LstmState ps = c.initial_policy_state();
    LstmState vs = c.initial_value_state();
    for (std::size_t t = 0; t < steps; ++t) {
        TrajectoryStep s;
        s.policy_features = random_vector(c.layout().policy_width(), rng);
        s.value_features = random_vector(c.layout().value_width(), rng);
        const auto dists = c.policy_step(s.policy_features, ps);
        s.actions = sample_actions(dists, rng);
        s.log_prob = joint_log_prob(dists, s.actions) + rng.uniform(-shift, shift);
        s.value = c.value_step(s.value_features, vs);
        s.reward = rng.normal();
        traj.steps.push_back(std::move(s));
    }
    return traj;
}

double objective_total(const Controller& c, const PreparedBatch& batch, const PpoConfig& cfg) {
    return ppo_objective(c, batch, cfg, nullptr).total;
}

} // namespace

TEST_SUITE("policy") {

TEST_CASE("zero weights give uniform heads") {
    Controller c(reduced_layout(), 16, 1);
    std::fill(c.policy_net().params().begin(), c.policy_net().params().end(), 0.0);
    Rng rng(2);
    auto state = c.initial_policy_state();
    const auto dists = c.policy_step(random_vector(c.layout().policy_width(), rng), state);
    REQUIRE(dists.size() == 2);
    for (const auto& p : dists)
        for (double q : p) CHECK(q == doctest::Approx(1.0 / static_cast<double>(p.size())).epsilon(1e-15));
}

TEST_CASE("policy step is pure and normalized") {
    Controller c(reduced_layout(), 16, 3);
    Rng rng(4);
    for (auto& w : c.policy_net().params()) w += 0.5 * rng.normal();
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = random_vector(c.layout().policy_width(), rng);
        auto s1 = c.initial_policy_state();
        auto s2 = c.initial_policy_state();
        const auto a = c.policy_step(x, s1);
        const auto b = c.policy_step(x, s2);
        CHECK(a == b);
        CHECK(s1.h == s2.h);
        for (const auto& p : a) {
            double sum = 0.0;
            for (double q : p) sum += q;
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    }
    CHECK(c.policy_net().shape().outputs == std::vector<std::size_t>{7, 4});
}

TEST_CASE("controller rejects malformed inputs") {
    Controller c(reduced_layout(), 8, 1);
    auto s = c.initial_policy_state();
    std::vector<double> short_x(c.layout().policy_width() - 1, 0.0);
    CHECK_THROWS_AS(c.policy_step(short_x, s), std::invalid_argument);
    std::vector<double> bad(c.layout().policy_width(), 0.0);
    bad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(c.policy_step(bad, s), std::invalid_argument);
}

TEST_CASE("ppo objective gradient matches finite differences") {
    Controller c(reduced_layout(), 8, 5);
    Rng rng(6);
    for (auto& w : c.policy_net().params()) w += 0.3 * rng.normal();
    for (auto& w : c.value_net().params()) w += 0.3 * rng.normal();
    PpoConfig cfg;
    const Trajectory traj = rollout(c, 3, rng, 0.1);
    const Trajectory* eps[] = {&traj};
    const auto batch = prepare_batch(eps, cfg);

    ControllerGradients g;
    ppo_objective(c, batch, cfg, &g);

    Controller probe = c;
    const auto fd_policy = oracle::numeric_gradient(
        [&](const std::vector<double>& w) {
            probe.policy_net().params() = w;
            return objective_total(probe, batch, cfg);
        },
        c.policy_net().params(), 1e-6);
    probe = c;
    const auto fd_value = oracle::numeric_gradient(
        [&](const std::vector<double>& w) {
            probe.value_net().params() = w;
            return objective_total(probe, batch, cfg);
        },
        c.value_net().params(), 1e-6);
    CHECK(oracle::max_relative_error(g.policy, fd_policy, 1e-6) < 1e-3);
    CHECK(oracle::max_relative_error(g.value, fd_value, 1e-6) < 1e-3);
}

TEST_CASE("zero advantage leaves only value gradients") {
    Controller c(reduced_layout(), 8, 7);
    Rng rng(8);
    PpoConfig cfg;
    cfg.entropy_coef = 0.0;
    cfg.normalize_advantages = false;
    const Trajectory traj = rollout(c, 4, rng, 0.1);
    const Trajectory* eps[] = {&traj};
    auto batch = prepare_batch(eps, cfg);
    for (auto& a : batch.advantages)
        for (double& v : a) v = 0.0;
    ControllerGradients g;
    const auto terms = ppo_objective(c, batch, cfg, &g);
    CHECK(terms.policy_loss == 0.0);
    for (double v : g.policy) CHECK(v == 0.0);
    CHECK(l2_norm(g.value) > 0.0);

    // Stored value equal to the return gives a zero advantage, while the
    // value network's own estimate is far from it.
    Trajectory zero_adv;
    zero_adv.steps = {traj.steps.front()};
    zero_adv.steps[0].value = 50.0;
    zero_adv.steps[0].reward = 50.0;
    const Controller before = c;
    PpoTrainer trainer(cfg, 1);
    const Trajectory* single[] = {&zero_adv};
    trainer.update(c, single);
    CHECK(c.policy_net().params() == before.policy_net().params());
    CHECK(c.value_net().params() != before.value_net().params());
}

TEST_CASE("clipped ratios carry no gradient") {
    Controller c(bandit_layout(), 8, 9);
    Rng rng(10);
    for (auto& w : c.policy_net().params()) w += 0.3 * rng.normal();
    PpoConfig cfg;
    cfg.entropy_coef = 0.0;
    cfg.value_coef = 0.0;
    cfg.normalize_advantages = false;

    std::vector<Trajectory> all, kept;
    double manual_loss = 0.0;
    for (int i = 0; i < 40; ++i) {
        Trajectory t = rollout(c, 1, rng, 0.0);
        const double logp = t.steps[0].log_prob;
        t.steps[0].log_prob = logp + rng.uniform(-0.6, 0.6);
        t.steps[0].reward = rng.uniform(-1.0, 1.0);
        t.steps[0].value = 0.0;
        const double ratio = std::exp(logp - t.steps[0].log_prob);
        const double adv = t.steps[0].reward;
        manual_loss -= std::min(ratio * adv, std::clamp(ratio, 0.8, 1.2) * adv) / 40.0;
        const bool clipped = (adv > 0.0 && ratio > 1.2) || (adv < 0.0 && ratio < 0.8);
        if (!clipped) kept.push_back(t);
        all.push_back(t);
    }
    REQUIRE(kept.size() < all.size());
    REQUIRE(!kept.empty());
    std::vector<const Trajectory*> all_ptr, kept_ptr;
    for (auto& t : all) all_ptr.push_back(&t);
    for (auto& t : kept) kept_ptr.push_back(&t);

    ControllerGradients g_all, g_kept;
    const auto terms = ppo_objective(c, prepare_batch(all_ptr, cfg), cfg, &g_all);
    ppo_objective(c, prepare_batch(kept_ptr, cfg), cfg, &g_kept);
    CHECK(terms.policy_loss == doctest::Approx(manual_loss).epsilon(1e-12));
    const double scale = static_cast<double>(kept.size()) / static_cast<double>(all.size());
    std::vector<double> expected(g_kept.policy.size());
    for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = g_kept.policy[i] * scale;
    CHECK(oracle::max_relative_error(g_all.policy, expected, 1e-12) < 1e-9);
    CHECK(terms.clip_fraction > 0.0);
}

TEST_CASE("two-armed bandit converges") {
    Controller c(bandit_layout(), 64, 11);
    PpoTrainer trainer(PpoConfig{}, 12);
    Rng rng(13);
    const std::vector<double> x(c.layout().policy_width(), 0.0);
    const std::vector<double> xv(c.layout().value_width(), 0.0);
    auto p_arm_a = [&] {
        auto s = c.initial_policy_state();
        return c.policy_step(x, s)[0][0];
    };
    int reached = -1;
    for (int update = 1; update <= 200 && reached < 0; ++update) {
        std::vector<Trajectory> batch(16);
        for (auto& t : batch) {
            auto ps = c.initial_policy_state();
            auto vs = c.initial_value_state();
            TrajectoryStep s;
            s.policy_features = x;
            s.value_features = xv;
            const auto d = c.policy_step(x, ps);
            s.actions = sample_actions(d, rng);
            s.log_prob = joint_log_prob(d, s.actions);
            s.value = c.value_step(xv, vs);
            s.reward = s.actions[0] == 0 ? 1.0 : 0.0;
            t.steps.push_back(s);
        }
        std::vector<const Trajectory*> ptrs;
        for (auto& t : batch) ptrs.push_back(&t);
        trainer.update(c, ptrs);
        if (p_arm_a() > 0.95) reached = update;
    }
    MESSAGE("P(arm A) > 0.95 after " << reached << " updates");
    CHECK(reached > 0);
}

TEST_CASE("rollout reuse is capped") {
    RolloutBuffer buffer(4);
    Trajectory t;
    t.steps.resize(2);
    buffer.add(t);
    for (std::size_t i = 1; i <= 3; ++i) {
        CHECK(buffer.take_batch().size() == i);
        buffer.add(t);
    }
    for (int i = 0; i < 10; ++i) buffer.take_batch();
    CHECK(buffer.max_uses_observed() == 4);
    CHECK(buffer.size() == 0);
    CHECK(buffer.rollouts_added() == 4);
    CHECK_THROWS_AS(RolloutBuffer(5), std::invalid_argument);
    PpoConfig cfg;
    cfg.max_reuse = 5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("episodes are isolated within a batch") {
    Controller c(reduced_layout(), 8, 14);
    Rng rng(15);
    PpoConfig cfg;
    const Trajectory a = rollout(c, 3, rng, 0.1);
    const Trajectory b = rollout(c, 5, rng, 0.1);
    const Trajectory* ab[] = {&a, &b};
    const Trajectory* ba[] = {&b, &a};
    ControllerGradients g1, g2;
    const auto t1 = ppo_objective(c, prepare_batch(ab, cfg), cfg, &g1);
    const auto t2 = ppo_objective(c, prepare_batch(ba, cfg), cfg, &g2);
    CHECK(t1.total == doctest::Approx(t2.total).epsilon(1e-14));
    CHECK(oracle::max_relative_error(g1.policy, g2.policy, 1e-12) < 1e-12);

    // Fresh state per episode: an episode's outputs do not depend on what ran before it.
    auto fresh = c.initial_policy_state();
    const auto first = c.policy_step(b.steps[0].policy_features, fresh);
    auto carried = c.initial_policy_state();
    for (const auto& s : a.steps) c.policy_step(s.policy_features, carried);
    auto reset = c.initial_policy_state();
    CHECK(c.policy_step(b.steps[0].policy_features, reset) == first);
}

TEST_CASE("controller checkpoints round-trip and refuse other layouts") {
    Controller c(reduced_layout(), 8, 16);
    Rng rng(17);
    for (auto& w : c.policy_net().params()) w += rng.normal();
    c.policy_normalizer().observe(random_vector(c.layout().policy_width(), rng));
    const auto text = serialize_controller(c);
    const auto layout = reduced_layout();
    const auto back = parse_controller(text, &layout);
    CHECK(back.policy_net().params() == c.policy_net().params());
    CHECK(back.value_net().params() == c.value_net().params());
    CHECK(back.policy_normalizer() == c.policy_normalizer());
    CHECK(controller_hash(back) == controller_hash(c));

    auto other = reduced_layout();
    other.head_arities = {7, 4, 10};
    other.hyper_names.clear();
    other.hyper_names = {"learning_rate", "grad_clip_fraction"};
    CHECK_THROWS_AS(parse_controller(text, &other), CheckpointFormatError);
    auto wider = reduced_layout();
    wider.task_encoding_width = 4;
    CHECK_THROWS_AS(parse_controller(text, &wider), CheckpointFormatError);
    CHECK_THROWS_AS(parse_controller("{not json", nullptr), CheckpointFormatError);
}

} // TEST_SUITE
