#include "xspec/desc/hog.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace xspec::desc {

namespace {

void check(int height, int width, const HogParams& p) {
  if (p.cell <= 0 || p.block <= 0 || p.bins <= 0 || p.block_stride <= 0)
    throw std::invalid_argument("hog: parameters must be positive");
  if (height % p.cell != 0 || width % p.cell != 0)
    throw std::invalid_argument("hog: image size " + std::to_string(height) + "x" + std::to_string(width) +
                                " is not divisible by the cell size " + std::to_string(p.cell));
  if (height / p.cell < p.block || width / p.cell < p.block)
    throw std::invalid_argument("hog: image smaller than one block");
}

int blocks_along(int cells, const HogParams& p) { return (cells - p.block) / p.block_stride + 1; }

}  // namespace

int hog_length(int height, int width, const HogParams& p) {
  check(height, width, p);
  return blocks_along(height / p.cell, p) * blocks_along(width / p.cell, p) * p.block * p.block * p.bins;
}

std::uint64_t hog_params_hash(int height, int width, const HogParams& p) {
  return fingerprint("hog size=" + std::to_string(height) + "x" + std::to_string(width) +
                     " cell=" + std::to_string(p.cell) + " block=" + std::to_string(p.block) +
                     " bins=" + std::to_string(p.bins) + " stride=" + std::to_string(p.block_stride) +
                     " clip=" + std::to_string(p.clip) + " norm=l2hys");
}

Descriptor hog_descriptor(const img::SpectralImage& image, const HogParams& p) {
  if (image.channels != 1) throw std::invalid_argument("hog: grayscale input required");
  const int h = image.height, w = image.width;
  check(h, w, p);
  const int cells_y = h / p.cell, cells_x = w / p.cell;
  std::vector<double> hist(static_cast<std::size_t>(cells_y) * cells_x * p.bins, 0.0);
  const double bin_width = 180.0 / p.bins;

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = image.at(y, std::min(x + 1, w - 1)) - image.at(y, std::max(x - 1, 0));
      const double gy = image.at(std::min(y + 1, h - 1), x) - image.at(std::max(y - 1, 0), x);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0) angle += 180.0;
      if (angle >= 180.0) angle -= 180.0;
      const double pos = angle / bin_width;
      const int b0 = static_cast<int>(std::floor(pos)) % p.bins;
      const int b1 = (b0 + 1) % p.bins;
      const double frac = pos - std::floor(pos);
      double* cell = &hist[(static_cast<std::size_t>(y / p.cell) * cells_x + x / p.cell) * p.bins];
      cell[b0] += mag * (1.0 - frac);
      cell[b1] += mag * frac;
    }
  }

  const int by = blocks_along(cells_y, p), bx = blocks_along(cells_x, p);
  const int block_len = p.block * p.block * p.bins;
  Descriptor d;
  d.kind = DescriptorKind::kHOG;
  d.params_hash = hog_params_hash(h, w, p);
  d.values.reserve(static_cast<std::size_t>(by) * bx * block_len);
  std::vector<double> block(static_cast<std::size_t>(block_len));
  const double eps2 = static_cast<double>(p.eps) * p.eps;
  for (int i = 0; i < by; ++i) {
    for (int j = 0; j < bx; ++j) {
      std::size_t k = 0;
      for (int cy = 0; cy < p.block; ++cy)
        for (int cx = 0; cx < p.block; ++cx) {
          const int row = i * p.block_stride + cy, col = j * p.block_stride + cx;
          const double* cell = &hist[(static_cast<std::size_t>(row) * cells_x + col) * p.bins];
          for (int b = 0; b < p.bins; ++b) block[k++] = cell[b];
        }
      double norm2 = 0;
      for (double v : block) norm2 += v * v;
      double inv = 1.0 / std::sqrt(norm2 + eps2);
      norm2 = 0;
      for (double& v : block) {
        v = std::min(v * inv, static_cast<double>(p.clip));
        norm2 += v * v;
      }
      inv = 1.0 / std::sqrt(norm2 + eps2);
      for (double v : block) d.values.push_back(v * inv);
    }
  }
  return d;
}

}  // namespace xspec::desc
