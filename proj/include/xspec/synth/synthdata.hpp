#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "xspec/eval/split.hpp"
#include "xspec/image/image.hpp"

namespace xspec::synth {

// Appearance of one class (identity x eye). Lengths are fractions of the
// image side.
struct IdentityParams {
  int index = 0;
  double iris_radius = 0;      // [0.12, 0.17]
  double iris_ellipticity = 0; // vertical / horizontal radius, [0.85, 1.0]
  double pupil_ratio = 0;      // pupil / iris radius, [0.30, 0.50]
  double melanin = 0;          // [0.3, 0.9]
  double eye_half_width = 0;   // [0.28, 0.38]
  double upper_lid = 0;        // upper lid arc height, [0.10, 0.16]
  double lower_lid = 0;        // lower lid arc depth, [0.06, 0.11]
  double brow_offset = 0;      // brow centre above eye centre, [0.22, 0.32]
  double brow_curvature = 0;   // [0.2, 1.2]
  double brow_thickness = 0;   // [0.035, 0.07]
  double eye_dx = 0;           // landmark offsets, [-0.05, 0.05]
  double eye_dy = 0;
  std::array<double, 3> skin_tone{};  // VIS RGB
  double skin_texture = 0;     // texture amplitude, [0.10, 0.22]
  std::uint64_t texture_seed = 0;
  std::uint64_t iris_seed = 0;
};

// Nuisance applied identically to both members of a pair.
struct NuisanceConfig {
  double max_shift_px = 2.0;
  double max_gain = 0.10;  // gain drawn from [1 - g, 1 + g]
  double noise_sigma = 0.005;

  static NuisanceConfig none() { return {0.0, 0.0, 0.0}; }
};

struct RenderConfig {
  int size = 64;
  int supersample = 2;  // render at size * supersample, then bicubic resize
  std::uint64_t seed = 7;
  NuisanceConfig nuisance{};
};

IdentityParams gen_identity(std::uint64_t dataset_seed, int index);

// Region labels shared by both spectra of a render.
enum Region : std::uint8_t { kSkin = 0, kBrow = 1, kSclera = 2, kIris = 3, kPupil = 4 };

struct RenderedPair {
  img::PairedSample pair;
  std::vector<std::uint8_t> regions;  // size x size, row-major
};

// VIS is RGB; NIR is single-channel, obtained from the clean VIS render by
// the spectral transfer. The right eye (odd index) is mirrored.
RenderedPair render_pair(const IdentityParams& identity, int capture_index, const RenderConfig& config);

struct DatasetConfig {
  int identities = 40;
  int captures = 15;  // per spectrum
  int train = 10;
  int test = 5;
  RenderConfig render{};
};

// Writes images/id{class}_{spectrum}_{capture}.png under out_dir plus
// manifest.txt; returns the split.
eval::DatasetSplit gen_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir);

}  // namespace xspec::synth
