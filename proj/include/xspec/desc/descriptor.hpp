#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xspec::desc {

enum class DescriptorKind : std::uint8_t { kHOG = 0, kLBP = 1, kEmbed = 2 };

std::string_view kind_name(DescriptorKind kind);

// Fixed-length feature vector. params_hash fingerprints the extractor
// configuration (including the image size) so that vectors from different
// configurations are never compared.
struct Descriptor {
  DescriptorKind kind = DescriptorKind::kEmbed;
  std::uint64_t params_hash = 0;
  std::vector<double> values;  // serialized as f32
};

// 64-bit FNV-1a.
std::uint64_t fingerprint(std::string_view text);

struct Keypoint {
  float x = 0;
  float y = 0;
  float scale = 0;
  float orientation = 0;  // radians
  std::array<float, 128> descriptor{};
};

using KeypointSet = std::vector<Keypoint>;

// Binary: "XDSC", u32 version, u8 kind, u64 params_hash, u32 length, f32[length].
std::string encode_descriptor(const Descriptor& d);
Descriptor decode_descriptor(std::string_view bytes);
void save_descriptor(const std::filesystem::path& path, const Descriptor& d);
Descriptor load_descriptor(const std::filesystem::path& path);

// Text: one keypoint per line, "x y scale orientation d0 .. d127".
std::string encode_keypoints(const KeypointSet& set);
KeypointSet decode_keypoints(std::string_view text);
void save_keypoints(const std::filesystem::path& path, const KeypointSet& set);
KeypointSet load_keypoints(const std::filesystem::path& path);

}  // namespace xspec::desc
