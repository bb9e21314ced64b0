#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace goku::io {

// Shared container convention for datasets and checkpoints: a directory with
// a JSON manifest plus raw little-endian float32 arrays in C order. Each
// array entry in the manifest records shape and a checksum of the bytes.

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ULL);

// Writes doubles as float32, returns {byte_count, checksum}.
struct ArrayInfo {
    std::vector<std::int64_t> shape;
    std::uint64_t checksum = 0;
};

ArrayInfo write_f32(const std::filesystem::path& file, const double* data, std::size_t n,
                    std::vector<std::int64_t> shape);

// Reads a float32 array into doubles, validating shape and checksum against
// the manifest entry. Throws CorruptDataset on any mismatch.
std::vector<double> read_f32(const std::filesystem::path& file, const nlohmann::json& entry);

void write_json(const std::filesystem::path& file, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& file);

}  // namespace goku::io
