#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "reinflect/model.hpp"

namespace reinflect {

// Model file layout, all integers little-endian:
//
//   magic            8 bytes  "RFLMODEL"
//   format version   u32
//   manifest length  u64
//   manifest         UTF-8 JSON: hyperparameters, vocabulary in id order,
//                    tensor names and shapes in storage order
//   tensor data      IEEE-754 binary64, row-major, in manifest order
//   checksum         u64 FNV-1a over every preceding byte
inline constexpr char kModelMagic[8] = {'R', 'F', 'L', 'M', 'O', 'D', 'E', 'L'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const ModelParameters& model);
// Throws LoadError with the matching reason on any malformed input.
ModelParameters deserialize_model(const std::vector<std::uint8_t>& bytes);

void save_model(const ModelParameters& model, const std::filesystem::path& path);
ModelParameters load_model(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size);

}  // namespace reinflect
