#include "xspec/desc/lbp.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace xspec::desc {

namespace {

constexpr int kDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
constexpr int kDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};

// Region r of n over length len; never empty.
std::pair<int, int> region_bounds(int r, int n, int len) {
  const int start = std::min(r * len / n, len - 1);
  const int end = std::max(start + 1, (r + 1) * len / n);
  return {start, std::min(end, len)};
}

}  // namespace

int lbp_length(const LbpParams& params) { return params.grid * params.grid * 256; }

std::uint64_t lbp_params_hash(int height, int width, const LbpParams& params) {
  return fingerprint("lbp size=" + std::to_string(height) + "x" + std::to_string(width) +
                     " radius=1 neighbours=8 grid=" + std::to_string(params.grid));
}

std::vector<std::uint8_t> lbp_codes(const img::SpectralImage& image) {
  if (image.channels != 1) throw std::invalid_argument("lbp: grayscale input required");
  const int h = image.height, w = image.width;
  if (h < 3 || w < 3) throw std::invalid_argument("lbp: image must be at least 3x3");
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float c = image.at(y, x);
      unsigned code = 0;
      for (int k = 0; k < 8; ++k) {
        const int yy = std::clamp(y + kDy[k], 0, h - 1);
        const int xx = std::clamp(x + kDx[k], 0, w - 1);
        if (image.at(yy, xx) >= c) code |= 1u << k;
      }
      codes[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint8_t>(code);
    }
  return codes;
}

Descriptor lbp_descriptor(const img::SpectralImage& image, const LbpParams& params) {
  if (params.grid <= 0) throw std::invalid_argument("lbp: grid must be positive");
  const auto codes = lbp_codes(image);
  const int h = image.height, w = image.width, g = params.grid;
  Descriptor d;
  d.kind = DescriptorKind::kLBP;
  d.params_hash = lbp_params_hash(h, w, params);
  d.values.assign(static_cast<std::size_t>(lbp_length(params)), 0.0);
  for (int ry = 0; ry < g; ++ry) {
    const auto [y0, y1] = region_bounds(ry, g, h);
    for (int rx = 0; rx < g; ++rx) {
      const auto [x0, x1] = region_bounds(rx, g, w);
      double counts[256] = {};
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) counts[codes[static_cast<std::size_t>(y) * w + x]] += 1.0;
      const double total = static_cast<double>(y1 - y0) * (x1 - x0);
      double* out = &d.values[(static_cast<std::size_t>(ry) * g + rx) * 256];
      for (int b = 0; b < 256; ++b) out[b] = counts[b] / total;
    }
  }
  return d;
}

}  // namespace xspec::desc
