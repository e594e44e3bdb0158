#include "lhopt/policy/checkpoint_io.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace lhopt::policy {

namespace {

using nlohmann::json;

json bank_to_json(const features::NormalizerBank& bank) {
    json mean = json::array(), var = json::array(), init = json::array();
    for (const auto& s : bank.states()) {
        mean.push_back(s.ema_mean);
        var.push_back(s.ema_var);
        init.push_back(s.initialized);
    }
    return {{"mean", mean}, {"var", var}, {"initialized", init}};
}

void bank_from_json(const json& j, features::NormalizerBank& bank) {
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto var = j.at("var").get<std::vector<double>>();
    const auto init = j.at("initialized").get<std::vector<bool>>();
    if (mean.size() != bank.width() || var.size() != bank.width() || init.size() != bank.width())
        throw CheckpointFormatError("checkpoint: normalizer width does not match the feature layout");
    for (std::size_t i = 0; i < bank.width(); ++i) bank.states()[i] = {mean[i], var[i], static_cast<bool>(init[i])};
}

json net_to_json(const LstmNetwork& net) {
    return {{"input", net.shape().input}, {"hidden", net.shape().hidden}, {"outputs", net.shape().outputs},
            {"params", net.params()}};
}

LstmNetwork net_from_json(const json& j) {
    LstmShape shape{j.at("input").get<std::size_t>(), j.at("hidden").get<std::size_t>(),
                    j.at("outputs").get<std::vector<std::size_t>>()};
    auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != shape.parameter_count())
        throw CheckpointFormatError("checkpoint: parameter count does not match network shape");
    return LstmNetwork(std::move(shape), std::move(params));
}

void fnv(std::uint64_t& h, std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
        h ^= (word >> (8 * b)) & 0xffU;
        h *= 0x100000001b3ULL;
    }
}

} // namespace

std::string serialize_controller(const Controller& c) {
    const auto& layout = c.layout();
    json j;
    j["format"] = "lhopt-controller";
    j["version"] = controller_format_version;
    j["head_arities"] = layout.head_arities;
    j["layout"] = {{"hyper_names", layout.hyper_names},
                   {"checkpoint_slots", layout.checkpoint_slots},
                   {"task_encoding_width", layout.task_encoding_width},
                   {"initial_noise_width", layout.initial_noise_width}};
    std::ostringstream hash;
    hash << std::hex << features::layout_hash(layout);
    j["layout_hash"] = hash.str();
    j["policy"] = net_to_json(c.policy_net());
    j["value"] = net_to_json(c.value_net());
    j["policy_normalizer"] = bank_to_json(c.policy_normalizer());
    j["value_normalizer"] = bank_to_json(c.value_normalizer());
    return j.dump(1);
}

Controller parse_controller(const std::string& text, const features::FeatureLayout* expected) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CheckpointFormatError(std::string("checkpoint: malformed JSON: ") + e.what());
    }
    try {
        if (j.value("format", "") != "lhopt-controller") throw CheckpointFormatError("checkpoint: unknown format tag");
        if (j.at("version").get<int>() != controller_format_version)
            throw CheckpointFormatError("checkpoint: unsupported version " + j.at("version").dump());
        features::FeatureLayout layout;
        layout.head_arities = j.at("head_arities").get<std::vector<std::size_t>>();
        const auto& l = j.at("layout");
        layout.hyper_names = l.at("hyper_names").get<std::vector<std::string>>();
        layout.checkpoint_slots = l.at("checkpoint_slots").get<std::size_t>();
        layout.task_encoding_width = l.at("task_encoding_width").get<std::size_t>();
        layout.initial_noise_width = l.at("initial_noise_width").get<std::size_t>();

        std::ostringstream hash;
        hash << std::hex << features::layout_hash(layout);
        if (j.at("layout_hash").get<std::string>() != hash.str())
            throw CheckpointFormatError("checkpoint: stored layout hash does not match its layout description");
        if (expected) {
            if (expected->head_arities != layout.head_arities)
                throw CheckpointFormatError("checkpoint: head arities differ from the configured action space");
            if (features::layout_hash(*expected) != features::layout_hash(layout))
                throw CheckpointFormatError("checkpoint: feature layout hash differs from the configured layout");
        }
        Controller c(layout, net_from_json(j.at("policy")), net_from_json(j.at("value")));
        bank_from_json(j.at("policy_normalizer"), c.policy_normalizer());
        bank_from_json(j.at("value_normalizer"), c.value_normalizer());
        return c;
    } catch (const json::exception& e) {
        throw CheckpointFormatError(std::string("checkpoint: missing or invalid field: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw CheckpointFormatError(std::string("checkpoint: ") + e.what());
    }
}

void save_controller(const Controller& controller, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << serialize_controller(controller) << '\n';
}

Controller load_controller(const std::filesystem::path& path, const features::FeatureLayout* expected) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_controller(text.str(), expected);
}

std::uint64_t controller_hash(const Controller& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : c.policy_net().params()) fnv(h, std::bit_cast<std::uint64_t>(v));
    for (double v : c.value_net().params()) fnv(h, std::bit_cast<std::uint64_t>(v));
    for (const auto* bank : {&c.policy_normalizer(), &c.value_normalizer()})
        for (const auto& s : bank->states()) {
            fnv(h, std::bit_cast<std::uint64_t>(s.ema_mean));
            fnv(h, std::bit_cast<std::uint64_t>(s.ema_var));
        }
    return h;
}

} // namespace lhopt::policy
