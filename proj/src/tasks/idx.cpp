#include "lhopt/tasks/idx.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

namespace lhopt::tasks {

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset) {
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::string hex(std::uint32_t v) {
    std::ostringstream os;
    os << "0x" << std::hex;
    os.width(8);
    os.fill('0');
    os << v;
    return os.str();
}

std::string magic_kind(std::uint32_t magic) {
    if (magic == idx_image_magic) return "image tensor";
    if (magic == idx_label_magic) return "label vector";
    return "unknown";
}

} // namespace

IdxArray parse_idx(const std::vector<std::uint8_t>& bytes, std::uint32_t expected_magic, const std::string& origin) {
    auto fail = [&](const std::string& what) { throw IdxParseError(origin + ": " + what); };
    if (bytes.size() < 4) fail("truncated header: missing magic number");
    IdxArray out;
    out.magic = read_be32(bytes, 0);
    if (out.magic != expected_magic) {
        if (out.magic == idx_image_magic || out.magic == idx_label_magic)
            fail("type mismatch: found " + magic_kind(out.magic) + " magic " + hex(out.magic) + ", expected " +
                 magic_kind(expected_magic) + " magic " + hex(expected_magic));
        fail("bad magic number " + hex(out.magic) + ", expected " + hex(expected_magic));
    }
    const std::size_t rank = out.magic & 0xff;
    std::size_t count = 1;
    for (std::size_t d = 0; d < rank; ++d) {
        const std::size_t offset = 4 + 4 * d;
        if (bytes.size() < offset + 4) fail("truncated header: missing size of dimension " + std::to_string(d));
        out.dims.push_back(read_be32(bytes, offset));
        count *= out.dims.back();
    }
    const std::size_t header = 4 + 4 * rank;
    if (bytes.size() - header < count)
        fail("truncated data: expected " + std::to_string(count) + " bytes, found " +
             std::to_string(bytes.size() - header));
    out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                    bytes.begin() + static_cast<std::ptrdiff_t>(header + count));
    return out;
}

IdxArray read_idx_file(const std::filesystem::path& path, std::uint32_t expected_magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxParseError(path.string() + ": cannot open file");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_idx(bytes, expected_magic, path.string());
}

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels,
                         double valid_fraction, std::uint64_t seed, std::size_t max_samples) {
    const IdxArray img = read_idx_file(images, idx_image_magic);
    const IdxArray lab = read_idx_file(labels, idx_label_magic);
    if (img.dims.empty() || lab.dims.size() != 1 || img.dims[0] != lab.dims[0])
        throw IdxParseError("image and label files disagree on sample count");
    std::size_t n = img.dims[0];
    if (max_samples > 0) n = std::min(n, max_samples);
    const std::size_t dim = n == 0 ? 0 : img.data.size() / img.dims[0];

    Dataset data;
    data.name = images.stem().string();
    data.input_dim = dim;
    data.inputs.resize(n * dim);
    for (std::size_t i = 0; i < n * dim; ++i) data.inputs[i] = static_cast<double>(img.data[i]) / 255.0;
    int max_label = 0;
    data.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        data.labels[i] = lab.data[i];
        max_label = std::max(max_label, data.labels[i]);
    }
    data.num_classes = static_cast<std::size_t>(max_label) + 1;
    split_dataset(data, valid_fraction, seed);
    return data;
}

} // namespace lhopt::tasks
