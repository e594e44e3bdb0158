#include "lhopt/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lhopt::harness {

namespace {

using nlohmann::json;

/// Walks one JSON object, remembering which keys were consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where() + "expected an object");
    }

    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, _] : j_.items())
            if (!seen_.count(key)) throw ConfigError("config: unknown key '" + path_ + key + "'");
    }

    template <class T>
    void get(const char* key, T& dst) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            dst = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("config: bad value for '" + path_ + key + "': " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    std::string path(const char* key) const { return path_ + key + "."; }

private:
    std::string where() const { return "config: '" + path_ + "': "; }
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class E, std::size_t N>
std::vector<E> parse_enum_list(const std::vector<std::string>& names, const E (&all)[N],
                               std::string_view (*name_of)(E), const std::string& what) {
    std::vector<E> out;
    for (const auto& n : names) {
        const auto it = std::find_if(std::begin(all), std::end(all), [&](E e) { return name_of(e) == n; });
        if (it == std::end(all)) throw ConfigError("config: unknown " + what + " '" + n + "'");
        out.push_back(*it);
    }
    return out;
}

tasks::DatasetSource parse_dataset(const json& j, const std::string& path) {
    Reader r(j, path);
    tasks::DatasetSource src;
    std::string kind = "blobs";
    r.get("name", src.name);
    r.get("kind", kind);
    r.get("samples", src.spec.samples);
    r.get("input_dim", src.spec.input_dim);
    r.get("outputs", src.spec.outputs);
    r.get("separation", src.spec.separation);
    r.get("noise", src.spec.noise);
    r.get("valid_fraction", src.spec.valid_fraction);
    src.valid_fraction = src.spec.valid_fraction;
    r.get("seed", src.spec.seed);
    std::string images, labels;
    r.get("images", images);
    r.get("labels", labels);
    r.get("max_samples", src.max_samples);
    if (kind == "blobs") {
        src.spec.kind = tasks::SyntheticKind::gaussian_blobs;
    } else if (kind == "linear") {
        src.spec.kind = tasks::SyntheticKind::linear_regression;
    } else if (kind == "idx") {
        if (images.empty() || labels.empty()) throw ConfigError("config: idx dataset needs 'images' and 'labels'");
        src.synthetic = false;
        src.images = images;
        src.labels = labels;
    } else {
        throw ConfigError("config: unknown dataset kind '" + kind + "'");
    }
    if (src.name.empty()) src.name = kind;
    return src;
}

void parse_distribution(const json& j, tasks::DistributionConfig& d) {
    Reader r(j, "distribution.");
    r.get("nqm_weight", d.nqm_weight);
    r.get("mlp_weight", d.mlp_weight);
    if (const auto* n = r.child("nqm")) {
        Reader nr(*n, "distribution.nqm.");
        nr.get("dim_min", d.nqm.dim_min);
        nr.get("dim_max", d.nqm.dim_max);
        nr.get("kappa_min", d.nqm.kappa_min);
        nr.get("kappa_max", d.nqm.kappa_max);
    }
    if (const auto* e = r.child("episode")) {
        Reader er(*e, "distribution.episode.");
        er.get("outer_min", d.episode.outer_min);
        er.get("outer_max", d.episode.outer_max);
        er.get("inner_min", d.episode.inner_min);
        er.get("inner_max", d.episode.inner_max);
    }
    if (const auto* m = r.child("mlp")) {
        Reader mr(*m, "distribution.mlp.");
        mr.get("depth_min", d.mlp.depth_min);
        mr.get("depth_max", d.mlp.depth_max);
        mr.get("widths", d.mlp.widths);
        mr.get("batch_sizes", d.mlp.batch_sizes);
        std::vector<std::string> names;
        if (mr.get("activations", names), !names.empty())
            d.mlp.activations = parse_enum_list(names, tasks::all_activations, tasks::activation_name, "activation");
        names.clear();
        if (mr.get("normalizations", names), !names.empty())
            d.mlp.normalizations =
                parse_enum_list(names, tasks::all_normalizations, tasks::normalization_name, "normalization");
        names.clear();
        if (mr.get("losses", names), !names.empty())
            d.mlp.losses = parse_enum_list(names, tasks::all_losses, tasks::loss_name, "loss");
        if (const auto* ds = mr.child("datasets")) {
            if (!ds->is_array()) throw ConfigError("config: 'distribution.mlp.datasets' must be an array");
            for (std::size_t i = 0; i < ds->size(); ++i)
                d.mlp.datasets.push_back(
                    parse_dataset(ds->at(i), "distribution.mlp.datasets[" + std::to_string(i) + "]."));
        }
    }
}

} // namespace

TrainingConfig parse_training_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: malformed JSON: ") + e.what());
    }
    TrainingConfig c;
    {
        Reader r(j, "");
        r.get("seed", c.seed);
        r.get("iterations", c.iterations);
        r.get("hidden", c.hidden);
        r.get("policy_repeats", c.policy_repeats);
        r.get("baseline_beta", c.baseline_beta);
        r.get("cadence", c.cadence);
        r.get("initial_noise", c.initial_noise);
        r.get("heldout_tasks", c.heldout_tasks);
        r.get("eval_every", c.eval_every);
        r.get("heads", c.heads);
        r.get("restart_head", c.restart_head);
        r.get("learn", c.learn);
        if (const auto* b = r.child("bounds")) {
            Reader br(*b, "bounds.");
            for (auto id : optim::all_hyper_ids) {
                const std::string name(optim::hyper_name(id));
                std::vector<double> range;
                br.get(name.c_str(), range);
                if (range.empty()) continue;
                if (range.size() != 2 || !(range[0] <= range[1]))
                    throw ConfigError("config: bounds." + name + " must be [min, max] with min <= max");
                c.bounds[id] = {range[0], range[1]};
            }
        }
        if (const auto* p = r.child("ppo")) {
            Reader pr(*p, "ppo.");
            pr.get("clip", c.ppo.clip);
            pr.get("epochs", c.ppo.epochs);
            pr.get("minibatch_episodes", c.ppo.minibatch_episodes);
            pr.get("learning_rate", c.ppo.learning_rate);
            pr.get("entropy_coef", c.ppo.entropy_coef);
            pr.get("value_coef", c.ppo.value_coef);
            pr.get("max_grad_norm", c.ppo.max_grad_norm);
            pr.get("max_reuse", c.ppo.max_reuse);
        }
        if (const auto* d = r.child("distribution")) parse_distribution(*d, c.distribution);
    }
    try {
        c.validate();
        c.space();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

TrainingConfig load_training_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_training_config(text.str());
}

} // namespace lhopt::harness
