#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xspec/image/image.hpp"

namespace xspec::eval {

enum class Role { kTrain, kTest };

std::string_view role_name(Role role);
Role parse_role(std::string_view text);

struct ManifestEntry {
  int class_id = 0;
  img::Spectrum spectrum = img::Spectrum::kVIS;
  std::string image_path;  // relative to the manifest's directory
  Role role = Role::kTrain;
  int capture_index = 0;
};

// Per-class train/test image lists, from a manifest.
struct DatasetSplit {
  std::vector<ManifestEntry> entries;

  // Entries of one class, role and spectrum ordered by capture index.
  std::vector<ManifestEntry> select(int class_id, Role role, img::Spectrum spectrum) const;
  std::vector<int> class_ids() const;  // sorted, unique
  bool has_spectrum(img::Spectrum spectrum) const;
  // Throws when train and test overlap or when classes differ in their
  // train/test counts for a spectrum present in the split.
  void validate() const;
};

// "class_id spectrum image_path role capture_index" per line.
std::string encode_manifest(const DatasetSplit& split);
DatasetSplit decode_manifest(std::string_view text);
void save_manifest(const std::filesystem::path& path, const DatasetSplit& split);
DatasetSplit load_manifest(const std::filesystem::path& path);

// Image identifier used in trials and score files, e.g. "id3_NIR_12".
std::string image_id(int class_id, img::Spectrum spectrum, int capture_index);

}  // namespace xspec::eval
