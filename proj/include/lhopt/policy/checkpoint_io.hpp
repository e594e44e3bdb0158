#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "lhopt/policy/controller.hpp"

namespace lhopt::policy {

inline constexpr int controller_format_version = 1;

class CheckpointFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// JSON document holding the format version, head arities, feature layout and
/// its hash, both networks' weights and both normalizer banks.
std::string serialize_controller(const Controller& controller);

/// Rebuilds a controller. When `expected` is given, a checkpoint whose layout
/// hash or head arities differ is refused.
Controller parse_controller(const std::string& text, const features::FeatureLayout* expected = nullptr);

void save_controller(const Controller& controller, const std::filesystem::path& path);
Controller load_controller(const std::filesystem::path& path, const features::FeatureLayout* expected = nullptr);

/// FNV-1a over the weights and normalizer statistics.
std::uint64_t controller_hash(const Controller& controller);

} // namespace lhopt::policy
