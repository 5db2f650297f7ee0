#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "xspec/image/image.hpp"

namespace xspec::gan {

enum class Direction { kVisToNir, kNirToVis };

std::string_view direction_name(Direction d);  // "vis2nir" / "nir2vis"
Direction parse_direction(std::string_view text);
img::Spectrum source_spectrum(Direction d);
img::Spectrum target_spectrum(Direction d);

struct TranslatorConfig {
  int image_size = 64;
  int in_channels = 1;
  int out_channels = 1;
  double lambda_l1 = 100.0;
  double lr = 0.001;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int epochs = 10;
  std::uint64_t seed = 7;
  Direction direction = Direction::kVisToNir;
  int ngf = 16;            // generator base filters
  int ndf = 16;            // discriminator base filters
  int disc_layers = 3;     // stride-2 blocks in the discriminator
  double dropout = 0.5;
  int patience = 5;        // epochs without held-out L1 improvement
  double val_fraction = 0.1;

  // Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

// key=value lines; unknown keys are rejected, missing keys keep defaults.
std::string encode_config(const TranslatorConfig& config);
TranslatorConfig decode_config(std::string_view text);

}  // namespace xspec::gan
