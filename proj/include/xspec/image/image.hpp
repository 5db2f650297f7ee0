#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xspec/nn/tensor.hpp"

namespace xspec::img {

enum class Spectrum { kNIR, kVIS, kNIRSynth, kVISSynth };
enum class Eye { kLeft, kRight };

std::string_view spectrum_name(Spectrum s);
Spectrum parse_spectrum(std::string_view name);
// Tag carried by a translated image: NIR input -> VIS_synth and vice versa.
Spectrum translated_tag(Spectrum source);
bool is_synthetic(Spectrum s);

// Single capture. Pixels are interleaved HxWxC in storage range [0, 1].
struct SpectralImage {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<float> pixels;
  Spectrum spectrum = Spectrum::kVIS;
  int identity = 0;
  Eye eye = Eye::kLeft;
  int capture_index = 0;

  SpectralImage() = default;
  SpectralImage(int h, int w, int c, float fill = 0.f);

  float& at(int y, int x, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  // Copies everything except the pixel buffer.
  SpectralImage with_same_tags(int h, int w, int c) const;
};

// Pixel-aligned NIR + VIS captures of one eye.
struct PairedSample {
  SpectralImage nir;
  SpectralImage vis;
};

// Separable bicubic convolution (a = -0.5) with edge clamping.
SpectralImage resize_bicubic(const SpectralImage& image, int height, int width);

// Luma 0.299 R + 0.587 G + 0.114 B; single-channel input is returned as is.
SpectralImage to_grayscale(const SpectralImage& image);

// Storage [0,1] <-> model space [-1,1] as a [1,C,H,W] tensor.
nn::Tensor<float> to_model_tensor(const SpectralImage& image);
SpectralImage from_model_tensor(const nn::Tensor<float>& tensor, const SpectralImage& tags);

double mean_abs_difference(const SpectralImage& a, const SpectralImage& b);

}  // namespace xspec::img
