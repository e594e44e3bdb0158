#include <doctest.h>

#include <cmath>
#include <limits>

#include "lhopt/common/rng.hpp"
#include "lhopt/features/assembler.hpp"
#include "lhopt/features/inner_stats.hpp"
#include "lhopt/features/integral_cdf.hpp"
#include "lhopt/features/normalizer.hpp"
#include "lhopt/features/similarity.hpp"
#include "support/oracles.hpp"

using namespace lhopt;
using namespace lhopt::features;

namespace {

constexpr double qnan = std::numeric_limits<double>::quiet_NaN();
constexpr double inf = std::numeric_limits<double>::infinity();

FeatureLayout small_layout() {
    FeatureLayout l;
    l.head_arities = {7, 4};
    l.hyper_names = {"learning_rate", "grad_clip_fraction"};
    l.task_encoding_width = 3;
    l.initial_noise_width = 8;
    return l;
}

RunSnapshot snapshot_at(double t, double train, double valid) {
    RunSnapshot s;
    s.progress = t;
    s.train_loss = train;
    s.valid_loss = valid;
    s.checkpoints.resize(3);
    s.hyper_ratios = {1.0, 1.0};
    s.param_norm = 2.0;
    s.previous_param_norm = 2.0;
    s.update_norm = 0.1;
    s.inner.fill(0.25);
    return s;
}

bool is_cdf_channel(const std::string& name) {
    const auto pos = name.rfind("/cdf");
    return pos != std::string::npos && pos + 5 == name.size();
}

/// Random observation stream on a random increasing grid of progress values.
void random_stream(Rng& rng, std::size_t n, std::vector<double>& t, std::vector<double>& y) {
    t.clear();
    y.clear();
    std::vector<double> cuts(n);
    for (double& c : cuts) c = rng.uniform();
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (double c : cuts) {
        t.push_back(c);
        y.push_back(rng.normal(0.0, 3.0));
    }
}

} // namespace

TEST_SUITE("features") {

TEST_CASE("single point stream has its value as mean and zero variance") {
    IntegralCdf cdf;
    cdf.observe(3.5, 0.2);
    for (std::size_t k = 0; k < cdf.base_count(); ++k) {
        CHECK(cdf.mean(k) == 3.5);
        CHECK(cdf.variance(k) == 0.0);
    }
}

TEST_CASE("uniform weight over a unit ramp has mean one half") {
    IntegralCdf cdf({1.0});
    cdf.observe(0.0, 0.0);
    cdf.observe(1.0, 1.0);
    CHECK(cdf.mean(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cdf.variance(0) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
}

TEST_CASE("accumulators agree with quadrature on random streams") {
    Rng rng(41);
    double worst_mean = 0.0, worst_var = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> t, y;
        random_stream(rng, 2 + rng.below(99), t, y);
        if (t.size() < 2) continue;
        IntegralCdf cdf;
        for (std::size_t i = 0; i < t.size(); ++i) cdf.observe(y[i], t[i]);
        for (std::size_t k = 0; k < cdf.base_count(); ++k) {
            const auto ref = oracle::interpolant_moments(t, y, cdf.base(k));
            worst_mean = std::max(worst_mean, std::abs(cdf.mean(k) - ref.mean));
            worst_var = std::max(worst_var, std::abs(cdf.variance(k) - ref.variance));
            CHECK(cdf.weight_mass(k) == doctest::Approx(ref.mass).epsilon(1e-9));
        }
    }
    CHECK(worst_mean <= 1e-9);
    CHECK(worst_var <= 1e-9);
}

TEST_CASE("ranking semantics of the feature path") {
    IntegralCdf a, b;
    for (double v : a.rank_then_observe(1.0, 0.0)) CHECK(v == 0.5);
    for (double v : a.rank_then_observe(2.0, 0.1)) CHECK(v == 1.0);
    for (double v : b.rank_then_observe(1.0, 0.0)) CHECK(v == 0.5);
    for (double v : b.rank_then_observe(0.5, 0.1)) CHECK(v == 0.0);

    IntegralCdf c;
    c.observe(0.0, 0.0);
    c.observe(2.0, 0.5);
    for (std::size_t k = 0; k < c.base_count(); ++k) CHECK(c.cdf(k, c.mean(k)) == doctest::Approx(0.5));
    CHECK(IntegralCdf{}.cdf(0, 123.0) == 0.5);
}

TEST_CASE("progress must increase and non-finite values are skipped") {
    IntegralCdf cdf;
    cdf.observe(1.0, 0.3);
    CHECK_THROWS_AS(cdf.observe(1.0, 0.3), std::invalid_argument);
    CHECK_THROWS_AS(cdf.observe(1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(cdf.observe(1.0, 1.5), std::invalid_argument);
    CHECK_FALSE(cdf.observe(qnan, 0.4));
    CHECK(cdf.count() == 1);
}

TEST_CASE("integral CDF outputs are invariant to affine maps of the stream") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> t, y;
        random_stream(rng, 30, t, y);
        const double alpha = std::exp(rng.uniform(-3.0, 3.0)), delta = rng.normal(0.0, 10.0);
        IntegralCdf a, b;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto ra = a.rank_then_observe(y[i], t[i]);
            const auto rb = b.rank_then_observe(alpha * y[i] + delta, t[i]);
            for (std::size_t k = 0; k < ra.size(); ++k) CHECK(ra[k] == doctest::Approx(rb[k]).epsilon(1e-9));
        }
    }
}

TEST_CASE("cdf cosine") {
    const std::vector<double> u = {1.0, 0.0, 0.0}, v = {0.0, 2.0, 0.0};
    CHECK(cdf_cosine(u, v).value == 0.5);
    const std::vector<double> one = {3.0};
    CHECK(cdf_cosine(one, one).value == doctest::Approx(oracle::normal_cdf(1.0)).epsilon(1e-15));
    CHECK(cdf_cosine(one, one).value == doctest::Approx(0.8413).epsilon(1e-4));
    const std::vector<double> zero = {0.0, 0.0, 0.0};
    const auto deg = cdf_cosine(u, zero);
    CHECK(deg.degenerate);
    CHECK(deg.value == 0.5);
    CHECK(std::isfinite(logit_cdf_cosine(1.0)));
    CHECK(logit_cdf_cosine(1.0) == doctest::Approx(std::log((1 - 1e-9) / 1e-9)));

    Rng rng(12);
    std::vector<double> samples;
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> a(1000), b(1000);
        for (double& x : a) x = rng.normal();
        for (double& x : b) x = rng.normal();
        samples.push_back(cdf_cosine(a, b).value);
    }
    CHECK(oracle::ks_uniform(samples).p_value > 0.01);
}

TEST_CASE("normalizer") {
    SUBCASE("first observation maps to 0 and constant streams stay at 0") {
        NormalizerState s;
        CHECK(s.observe_and_normalize(4.0) == 0.0);
        for (int i = 0; i < 100; ++i) CHECK(s.observe_and_normalize(4.0) == doctest::Approx(0.0));
    }
    SUBCASE("step change saturates at the clip") {
        NormalizerState s;
        for (int i = 0; i < 5000; ++i) s.observe_and_normalize(0.0);
        CHECK(s.observe_and_normalize(1000.0) == 2.0);
    }
    SUBCASE("non-finite input") {
        NormalizerState s;
        s.observe(1.0);
        const auto before = s;
        CHECK_FALSE(s.observe(qnan));
        CHECK(s == before);
        CHECK(s.normalize(inf) == 0.0);
        CHECK(NormalizerState{}.normalize(5.0) == 0.0);
    }
    SUBCASE("any stream stays clipped") {
        Rng rng(1);
        NormalizerState s;
        for (int i = 0; i < 10000; ++i) {
            const double x = rng.normal(0.0, std::exp(rng.uniform(-10.0, 10.0)));
            const double z = s.observe_and_normalize(x);
            CHECK(std::abs(z) <= 2.0);
        }
    }
}

TEST_CASE("inner statistics accumulate on cadence") {
    optim::StepStats none_clipped;
    none_clipped.fraction_clipped = 0.0;
    none_clipped.fraction_denom_ge_eps = 1.0;
    none_clipped.tensors = {{.elements = 4}};
    const auto v = inner_step_values(none_clipped, std::nullopt);
    CHECK(v[static_cast<std::size_t>(InnerChannel::fraction_clipped)] == 0.0);
    CHECK(v[static_cast<std::size_t>(InnerChannel::fraction_denom_ge_eps)] == 1.0);
    CHECK(std::isnan(v[static_cast<std::size_t>(InnerChannel::log_noise_scale)]));

    InnerStatsAccumulator acc(4);
    Rng rng(9);
    std::vector<InnerValues> sampled;
    for (std::size_t step = 0; step < 40; ++step) {
        optim::StepStats s;
        s.fraction_clipped = rng.uniform();
        s.fraction_denom_ge_eps = rng.uniform();
        s.mean_abs_prelr_update = rng.uniform();
        s.param_norm = 1.0 + rng.uniform();
        s.update_norm = rng.uniform();
        s.tensors = {{.elements = 10, .trust_ratio = 1.0 + rng.uniform(), .cos_grad_momentum = rng.uniform(-1, 1)}};
        const double noise = std::exp(rng.normal());
        if (acc.accumulate(s, step, noise)) sampled.push_back(inner_step_values(s, noise));
    }
    CHECK(sampled.size() == 10);
    const auto means = acc.means();
    for (std::size_t c = 0; c < inner_channel_count; ++c) {
        double sum = 0.0;
        for (const auto& s : sampled) sum += s[c];
        CHECK(means[c] == doctest::Approx(sum / 10.0).epsilon(1e-12));
    }
    acc.reset();
    CHECK(acc.samples() == 0);
    CHECK(std::isnan(acc.means()[0]));
}

TEST_CASE("noise scale estimator") {
    CHECK_THROWS_AS(estimate_noise_scale(1.0, 1.0, 4.0, 4.0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_noise_scale(qnan, 1.0, 1.0, 4.0), std::invalid_argument);
    CHECK(estimate_noise_scale(5.0, 5.0, 1.0, 64.0) == noise_scale_floor);

    // Per-example gradient = G + N(0, sigma^2 I); B_true = d sigma^2 / |G|^2.
    auto monte_carlo = [](double sigma, std::uint64_t seed) {
        Rng rng(seed);
        const std::size_t d = 50, big = 100;
        double sum = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> mean_big(d, 0.0), single(d);
            for (std::size_t j = 0; j < big; ++j)
                for (std::size_t i = 0; i < d; ++i) {
                    const double g = 1.0 + sigma * rng.normal();
                    mean_big[i] += g / static_cast<double>(big);
                    if (j == 0) single[i] = g;
                }
            double small_sq = 0.0, big_sq = 0.0;
            for (double x : single) small_sq += x * x;
            for (double x : mean_big) big_sq += x * x;
            sum += estimate_noise_scale(small_sq, big_sq, 1.0, static_cast<double>(big));
        }
        return sum / 1000.0;
    };
    const double b1 = monte_carlo(1.0, 100);
    CHECK(b1 == doctest::Approx(1.0).epsilon(0.2));
    const double b2 = monte_carlo(std::sqrt(2.0), 101);
    CHECK(b2 == doctest::Approx(2.0).epsilon(0.2));
    CHECK(b2 / b1 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("policy features at the first outer step") {
    const auto layout = small_layout();
    PolicyFeatureExtractor ex(layout);
    RunSnapshot s = snapshot_at(0.0, 2.0, 2.5);
    s.previous_action.clear();
    const auto raw = ex.extract(s);
    const auto names = policy_feature_names(layout);
    REQUIRE(raw.size() == names.size());
    REQUIRE(raw.size() == layout.policy_width());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (names[i] == "progress") CHECK(raw[i] == 0.0);
        if (is_cdf_channel(names[i])) CHECK(raw[i] == 0.5);
        if (names[i].rfind("prev_action/", 0) == 0) CHECK(raw[i] == 0.0);
    }
}

TEST_CASE("feature extraction is pure and loss scale only moves raw log-loss channels") {
    const auto layout = small_layout();
    const auto names = policy_feature_names(layout);
    PolicyFeatureExtractor a(layout), b(layout), c(layout);
    Rng rng(4);
    for (int k = 0; k < 12; ++k) {
        RunSnapshot s = snapshot_at(k / 12.0, 3.0 * std::exp(-0.1 * k + 0.05 * rng.normal()),
                                    3.2 * std::exp(-0.08 * k + 0.05 * rng.normal()));
        s.previous_action = {static_cast<int>(rng.below(7)), static_cast<int>(rng.below(4))};
        RunSnapshot scaled = s;
        scaled.train_loss *= 17.0;
        scaled.valid_loss *= 17.0;
        const auto ra = a.extract(s), rb = b.extract(s), rc = c.extract(scaled);
        CHECK(ra == rb);
        for (std::size_t i = 0; i < ra.size(); ++i) {
            const bool loss_cdf = (names[i].rfind("log_train_loss/cdf", 0) == 0 ||
                                   names[i].rfind("log_valid_loss/cdf", 0) == 0);
            if (loss_cdf) CHECK(std::abs(ra[i] - rc[i]) <= 1e-12);
            if (names[i].rfind("log_", 0) != 0 && names[i].rfind("log_loss_ratio", 0) != 0) CHECK(ra[i] == rc[i]);
        }
    }
}

TEST_CASE("NaN inputs set flags and default to zero") {
    const auto layout = small_layout();
    const auto names = policy_feature_names(layout);
    PolicyFeatureExtractor ex(layout);
    ex.extract(snapshot_at(0.0, 1.0, 1.0));
    const auto raw = ex.extract(snapshot_at(0.5, qnan, qnan));
    for (std::size_t i = 0; i < raw.size(); ++i) {
        CHECK(std::isfinite(raw[i]));
        if (names[i] == "log_train_loss/is_nan" || names[i] == "log_valid_loss/is_nan" ||
            names[i] == "log_loss_ratio/is_nan")
            CHECK(raw[i] == 1.0);
    }
}

TEST_CASE("layout is independent of the task and exposes no absolute hyperparameters") {
    const auto layout = small_layout();
    CHECK(layout.value_width() == layout.policy_width() + 3 + 8 + 9);
    for (const auto& n : policy_feature_names(layout))
        if (n.find("learning_rate") != std::string::npos) CHECK(n.rfind("hyper_log_ratio/", 0) == 0);
    auto other = layout;
    other.hyper_names.push_back("epsilon");
    CHECK(layout_hash(layout) != layout_hash(other));
}

TEST_CASE("value extras must match the layout") {
    const auto layout = small_layout();
    ValueExtras e;
    e.task_encoding = {1.0, 0.0};
    e.initial_noise.assign(8, 0.0);
    CHECK_THROWS_AS(assemble_value_features({}, e, layout), std::invalid_argument);
}

} // TEST_SUITE
