#pragma once

#include "xspec/desc/descriptor.hpp"
#include "xspec/image/image.hpp"

namespace xspec::desc {

struct HogParams {
  int cell = 8;
  int block = 2;  // cells per block side
  int bins = 9;   // unsigned orientation, 0..180 degrees
  int block_stride = 1;
  float clip = 0.2f;
  float eps = 1e-6f;
};

int hog_length(int height, int width, const HogParams& params = {});
std::uint64_t hog_params_hash(int height, int width, const HogParams& params = {});

// Central-difference gradients with edge clamping; each pixel votes its
// magnitude into the two nearest orientation bins (centers at multiples of
// 180/bins). Blocks are L2-hys normalized.
Descriptor hog_descriptor(const img::SpectralImage& image, const HogParams& params = {});

}  // namespace xspec::desc
