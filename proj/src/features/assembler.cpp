#include "lhopt/features/assembler.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lhopt::features {

namespace {

/// Collects either values or names while a feature vector is laid out, so
/// both views come from one code path.
class Sink {
public:
    explicit Sink(bool record_names) : names_enabled_(record_names) {}

    void add(const std::string& name, double value) {
        values_.push_back(std::isfinite(value) ? value : 0.0);
        if (names_enabled_) names_.push_back(name);
    }

    void add_cdf(const std::string& name, const std::vector<double>& cdf) {
        for (std::size_t k = 0; k < cdf.size(); ++k) add(name + "/cdf" + std::to_string(k), cdf[k]);
    }

    std::vector<double> values_;
    std::vector<std::string> names_;

private:
    bool names_enabled_;
};

double flag(bool b) { return b ? 1.0 : 0.0; }

double safe_log_ratio(double num, double den) {
    if (!(num > 0.0) || !(den > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log(num / den);
}

void emit_log_loss(Sink& sink, IntegralCdf& stream, const std::string& name, double loss, double t) {
    const double value = std::log(loss);
    sink.add(name + "/is_nan", flag(std::isnan(value)));
    sink.add(name + "/is_inf", flag(std::isinf(value)));
    sink.add_cdf(name, stream.rank_then_observe(value, t));
}

void emit_tanh_cdf(Sink& sink, IntegralCdf& stream, const std::string& name, double value, double t) {
    sink.add(name + "/tanh", std::tanh(value));
    sink.add_cdf(name, stream.rank_then_observe(value, t));
}

void build_policy(const FeatureLayout& layout, const RunSnapshot& s, IntegralCdf& loss_ratio, IntegralCdf& train,
                  IntegralCdf& valid, IntegralCdf& param_ratio, IntegralCdf& update_ratio,
                  std::vector<IntegralCdf>& inner, Sink& sink) {
    const double t = s.progress;
    sink.add("progress", t);

    for (std::size_t h = 0; h < layout.head_arities.size(); ++h) {
        const int chosen = h < s.previous_action.size() ? s.previous_action[h] : -1;
        for (std::size_t a = 0; a < layout.head_arities[h]; ++a)
            sink.add("prev_action/" + std::to_string(h) + "/" + std::to_string(a),
                     flag(chosen == static_cast<int>(a)));
    }

    const double ratio = safe_log_ratio(s.train_loss, s.valid_loss);
    sink.add("log_loss_ratio/is_nan", flag(std::isnan(ratio)));
    sink.add("log_loss_ratio/tanh", std::tanh(ratio));
    sink.add_cdf("log_loss_ratio", loss_ratio.rank_then_observe(ratio, t));

    emit_log_loss(sink, train, "log_train_loss", s.train_loss, t);
    emit_log_loss(sink, valid, "log_valid_loss", s.valid_loss, t);

    for (std::size_t c = 0; c < layout.checkpoint_slots; ++c) {
        const auto* info = c < s.checkpoints.size() && s.checkpoints[c] ? &*s.checkpoints[c] : nullptr;
        const std::string prefix = "checkpoint/" + std::to_string(c);
        sink.add(prefix + "/occupied", flag(info != nullptr));
        sink.add(prefix + "/loss_percentile", info ? info->loss_percentile : 0.0);
        sink.add(prefix + "/progress", info ? info->progress : 0.0);
    }

    for (std::size_t i = 0; i < layout.hyper_names.size(); ++i) {
        const double r = i < s.hyper_ratios.size() ? s.hyper_ratios[i] : 1.0;
        sink.add("hyper_log_ratio/" + layout.hyper_names[i], r > 0.0 ? std::log(r) : 0.0);
    }

    emit_tanh_cdf(sink, param_ratio, "log_param_norm_ratio", safe_log_ratio(s.param_norm, s.previous_param_norm), t);
    emit_tanh_cdf(sink, update_ratio, "log_update_param_ratio", safe_log_ratio(s.update_norm, s.previous_param_norm),
                  t);

    for (std::size_t c = 0; c < inner_channel_count; ++c) {
        const std::string name = "inner/" + std::string(inner_channel_name(c));
        sink.add(name + "/raw", s.inner[c]);
        sink.add_cdf(name, inner[c].rank_then_observe(s.inner[c], t));
    }
}

void build_value_extras(const FeatureLayout& layout, const ValueExtras& e, Sink& sink) {
    if (e.task_encoding.size() != layout.task_encoding_width || e.initial_noise.size() != layout.initial_noise_width)
        throw std::invalid_argument("assemble_value_features: extras do not match the feature layout");
    for (std::size_t i = 0; i < e.task_encoding.size(); ++i) sink.add("task/" + std::to_string(i), e.task_encoding[i]);
    for (std::size_t i = 0; i < e.initial_noise.size(); ++i)
        sink.add("initial_noise/" + std::to_string(i), e.initial_noise[i]);
    sink.add("reward_so_far", e.reward_so_far);
    sink.add("raw_log_train_loss", std::log(e.train_loss));
    sink.add("raw_log_valid_loss", std::log(e.valid_loss));
    sink.add("baseline/log_min", std::log(e.baseline.min_loss));
    sink.add("baseline/log_max", std::log(e.baseline.max_loss));
    sink.add("baseline/log_final", std::log(e.baseline.final_loss));
    sink.add("baseline/log_a", std::log(e.baseline.fit_a));
    sink.add("baseline/b", e.baseline.fit_b);
    sink.add("baseline/c", e.baseline.fit_c);
}

} // namespace

std::size_t FeatureLayout::policy_width() const { return policy_feature_names(*this).size(); }

std::size_t FeatureLayout::value_width() const { return value_feature_names(*this).size(); }

std::vector<std::string> policy_feature_names(const FeatureLayout& layout) {
    Sink sink(true);
    RunSnapshot empty;
    IntegralCdf a, b, c, d, e;
    std::vector<IntegralCdf> inner(inner_channel_count);
    build_policy(layout, empty, a, b, c, d, e, inner, sink);
    return sink.names_;
}

std::vector<std::string> value_feature_names(const FeatureLayout& layout) {
    auto names = policy_feature_names(layout);
    Sink sink(true);
    ValueExtras extras;
    extras.task_encoding.resize(layout.task_encoding_width);
    extras.initial_noise.resize(layout.initial_noise_width);
    build_value_extras(layout, extras, sink);
    names.insert(names.end(), sink.names_.begin(), sink.names_.end());
    return names;
}

std::uint64_t layout_hash(const FeatureLayout& layout) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& name : value_feature_names(layout)) {
        for (unsigned char ch : name) {
            h ^= ch;
            h *= 1099511628211ULL;
        }
        h ^= 0xff;
        h *= 1099511628211ULL;
    }
    return h;
}

PolicyFeatureExtractor::PolicyFeatureExtractor(FeatureLayout layout)
    : layout_(std::move(layout)), inner_(inner_channel_count) {}

std::vector<double> PolicyFeatureExtractor::extract(const RunSnapshot& snapshot) {
    Sink sink(false);
    build_policy(layout_, snapshot, loss_ratio_, train_loss_, valid_loss_, param_norm_ratio_, update_ratio_, inner_,
                 sink);
    return std::move(sink.values_);
}

std::vector<double> assemble_value_features(const std::vector<double>& policy_raw, const ValueExtras& extras,
                                            const FeatureLayout& layout) {
    Sink sink(false);
    build_value_extras(layout, extras, sink);
    std::vector<double> out = policy_raw;
    out.insert(out.end(), sink.values_.begin(), sink.values_.end());
    return out;
}

} // namespace lhopt::features
