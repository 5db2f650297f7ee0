#pragma once

#include <filesystem>

#include "xspec/image/image.hpp"

namespace xspec::img {

// 8-bit PNG (gray or RGB) and binary PGM (P5). Pixel values are quantized
// to round(255 v).
void write_png(const std::filesystem::path& path, const SpectralImage& image);
SpectralImage read_png(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const SpectralImage& image);
SpectralImage read_pgm(const std::filesystem::path& path);

// Dispatches on extension (.png / .pgm).
SpectralImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const SpectralImage& image);

}  // namespace xspec::img
