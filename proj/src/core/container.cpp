#include "goku/core/container.hpp"

#include <bit>
#include <fstream>

#include "goku/core/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container format is little-endian; big-endian hosts need byte swaps");

namespace goku::io {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

ArrayInfo write_f32(const std::filesystem::path& file, const double* data, std::size_t n,
                    std::vector<std::int64_t> shape) {
    std::int64_t expect = 1;
    for (auto d : shape) expect *= d;
    if (expect != static_cast<std::int64_t>(n))
        throw InvalidArgument("write_f32: shape does not match element count for " +
                              file.string());

    std::vector<float> buf(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(data[i]);

    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(n * sizeof(float)));
    if (!out) throw std::runtime_error("write failed: " + file.string());

    ArrayInfo info;
    info.shape = std::move(shape);
    info.checksum = fnv1a(buf.data(), n * sizeof(float));
    return info;
}

std::vector<double> read_f32(const std::filesystem::path& file, const nlohmann::json& entry) {
    std::int64_t count = 1;
    for (const auto& d : entry.at("shape")) count *= d.get<std::int64_t>();

    std::ifstream in(file, std::ios::binary | std::ios::ate);
    if (!in) throw CorruptDataset("missing array file: " + file.string());
    const auto bytes = static_cast<std::int64_t>(in.tellg());
    if (bytes != count * static_cast<std::int64_t>(sizeof(float)))
        throw CorruptDataset("size mismatch for " + file.string() + ": manifest says " +
                             std::to_string(count) + " float32 values, file has " +
                             std::to_string(bytes) + " bytes");
    in.seekg(0);

    std::vector<float> buf(static_cast<std::size_t>(count));
    in.read(reinterpret_cast<char*>(buf.data()), bytes);
    if (!in) throw CorruptDataset("short read: " + file.string());

    if (entry.contains("checksum")) {
        const auto sum = fnv1a(buf.data(), buf.size() * sizeof(float));
        if (sum != entry.at("checksum").get<std::uint64_t>())
            throw CorruptDataset("checksum mismatch for " + file.string());
    }

    std::vector<double> out(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i];
    return out;
}

void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
    std::ofstream out(file, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
    out << j.dump(2) << "\n";
}

nlohmann::json read_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw CorruptDataset("missing manifest: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw CorruptDataset("manifest parse failure in " + file.string() + ": " + e.what());
    }
    return j;
}

}  // namespace goku::io
