#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xspec/nn/layers.hpp"

namespace xspec::nn {

// Flat parameter container:
//   "XSPT" | u32 version | u32 count
//   count x (u32 name_len | name bytes | u32 ndim | ndim x u32 dim)
//   then every tensor as little-endian f32, in manifest order.
inline constexpr char kCheckpointMagic[4] = {'X', 'S', 'P', 'T'};
inline constexpr unsigned kCheckpointVersion = 1;

struct ManifestEntry {
  std::string name;
  Shape shape;
};

template <typename T>
std::string encode_checkpoint(const std::vector<NamedTensor<T>>& tensors);

// Fills tensors in place; the stored manifest must match names and shapes.
template <typename T>
void decode_checkpoint(const std::string& bytes, const std::vector<NamedTensor<T>>& tensors);

std::vector<ManifestEntry> read_manifest(const std::string& bytes);

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamList<T>& params);

template <typename T>
void load_checkpoint(const std::filesystem::path& path, const ParamList<T>& params);

}  // namespace xspec::nn
