#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "lhopt/tasks/dataset.hpp"

namespace lhopt::tasks {

inline constexpr std::uint32_t idx_image_magic = 0x00000803;
inline constexpr std::uint32_t idx_label_magic = 0x00000801;

class IdxParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unsigned-byte IDX tensor: big-endian magic, one u32 per dimension, raw bytes.
struct IdxArray {
    std::uint32_t magic = 0;
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> data;
};

IdxArray parse_idx(const std::vector<std::uint8_t>& bytes, std::uint32_t expected_magic, const std::string& origin);
IdxArray read_idx_file(const std::filesystem::path& path, std::uint32_t expected_magic);

/// Images (pixels scaled to [0, 1], flattened) paired with labels.
Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                         double valid_fraction, std::uint64_t seed, std::size_t max_samples = 0);

} // namespace lhopt::tasks
