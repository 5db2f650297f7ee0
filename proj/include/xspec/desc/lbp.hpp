#pragma once

#include <vector>

#include "xspec/desc/descriptor.hpp"
#include "xspec/image/image.hpp"

namespace xspec::desc {

struct LbpParams {
  int grid = 8;  // regions per side
};

int lbp_length(const LbpParams& params = {});
std::uint64_t lbp_params_hash(int height, int width, const LbpParams& params = {});

// Radius-1, 8-neighbour codes, bit k set when neighbour k >= center.
// Neighbours run clockwise from the top-left; borders are edge-clamped.
std::vector<std::uint8_t> lbp_codes(const img::SpectralImage& image);

// Concatenated per-region histograms, each normalized to sum 1.
Descriptor lbp_descriptor(const img::SpectralImage& image, const LbpParams& params = {});

}  // namespace xspec::desc
