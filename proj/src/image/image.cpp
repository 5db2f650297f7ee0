#include "xspec/image/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace xspec::img {

std::string_view spectrum_name(Spectrum s) {
  switch (s) {
    case Spectrum::kNIR: return "NIR";
    case Spectrum::kVIS: return "VIS";
    case Spectrum::kNIRSynth: return "NIR_synth";
    case Spectrum::kVISSynth: return "VIS_synth";
  }
  return "?";
}

Spectrum parse_spectrum(std::string_view name) {
  if (name == "NIR") return Spectrum::kNIR;
  if (name == "VIS") return Spectrum::kVIS;
  if (name == "NIR_synth") return Spectrum::kNIRSynth;
  if (name == "VIS_synth") return Spectrum::kVISSynth;
  throw std::invalid_argument("unknown spectrum '" + std::string(name) + "'");
}

Spectrum translated_tag(Spectrum source) {
  switch (source) {
    case Spectrum::kNIR:
    case Spectrum::kNIRSynth: return Spectrum::kVISSynth;
    case Spectrum::kVIS:
    case Spectrum::kVISSynth: return Spectrum::kNIRSynth;
  }
  return Spectrum::kNIRSynth;
}

bool is_synthetic(Spectrum s) { return s == Spectrum::kNIRSynth || s == Spectrum::kVISSynth; }

SpectralImage::SpectralImage(int h, int w, int c, float fill) : height(h), width(w), channels(c) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("image dimensions must be positive");
  if (c != 1 && c != 3) throw std::invalid_argument("images have 1 or 3 channels");
  pixels.assign(static_cast<std::size_t>(h) * w * c, fill);
}

SpectralImage SpectralImage::with_same_tags(int h, int w, int c) const {
  SpectralImage out(h, w, c);
  out.spectrum = spectrum;
  out.identity = identity;
  out.eye = eye;
  out.capture_index = capture_index;
  return out;
}

namespace {

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2) * t - (a + 3)) * t * t + 1;
  if (t < 2.0) return ((a * t - 5 * a) * t + 8 * a) * t - 4 * a;
  return 0.0;
}

struct Taps {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> make_taps(int in, int out) {
  std::vector<Taps> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double src = (o + 0.5) * scale - 0.5;
    const int base = static_cast<int>(std::floor(src));
    const double frac = src - base;
    for (int k = 0; k < 4; ++k) {
      taps[o].index[k] = std::clamp(base - 1 + k, 0, in - 1);
      taps[o].weight[k] = cubic_weight(frac - (k - 1));
    }
  }
  return taps;
}

}  // namespace

SpectralImage resize_bicubic(const SpectralImage& image, int height, int width) {
  if (height < 4 || width < 4) throw std::invalid_argument("resize target must be at least 4x4");
  const int c = image.channels;
  const auto ty = make_taps(image.height, height);
  const auto tx = make_taps(image.width, width);

  // Horizontal pass, then vertical.
  std::vector<double> tmp(static_cast<std::size_t>(image.height) * width * c);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < width; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0;
        for (int k = 0; k < 4; ++k) acc += tx[x].weight[k] * image.at(y, tx[x].index[k], ch);
        tmp[(static_cast<std::size_t>(y) * width + x) * c + ch] = acc;
      }
  SpectralImage out = image.with_same_tags(height, width, c);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0;
        for (int k = 0; k < 4; ++k)
          acc += ty[y].weight[k] * tmp[(static_cast<std::size_t>(ty[y].index[k]) * width + x) * c + ch];
        out.at(y, x, ch) = static_cast<float>(acc);
      }
  return out;
}

SpectralImage to_grayscale(const SpectralImage& image) {
  if (image.channels == 1) return image;
  if (image.channels != 3) throw std::invalid_argument("to_grayscale: expected 1 or 3 channels");
  SpectralImage out = image.with_same_tags(image.height, image.width, 1);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      out.at(y, x) = static_cast<float>(0.299 * image.at(y, x, 0) + 0.587 * image.at(y, x, 1) +
                                        0.114 * image.at(y, x, 2));
  return out;
}

nn::Tensor<float> to_model_tensor(const SpectralImage& image) {
  const int c = image.channels, h = image.height, w = image.width;
  std::vector<float> data(static_cast<std::size_t>(c) * h * w);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        data[(static_cast<std::size_t>(ch) * h + y) * w + x] = 2.f * image.at(y, x, ch) - 1.f;
  return nn::Tensor<float>({1, c, h, w}, std::move(data));
}

SpectralImage from_model_tensor(const nn::Tensor<float>& tensor, const SpectralImage& tags) {
  if (tensor.ndim() != 4 || tensor.dim(0) != 1)
    throw nn::DimensionError("from_model_tensor: expected [1,C,H,W]");
  const int c = tensor.dim(1), h = tensor.dim(2), w = tensor.dim(3);
  SpectralImage out = tags.with_same_tags(h, w, c);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        out.at(y, x, ch) = std::clamp(
            0.5f * (tensor.data()[(static_cast<std::size_t>(ch) * h + y) * w + x] + 1.f), 0.f, 1.f);
  return out;
}

double mean_abs_difference(const SpectralImage& a, const SpectralImage& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels)
    throw std::invalid_argument("mean_abs_difference: image shapes differ");
  double acc = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) acc += std::abs(a.pixels[i] - b.pixels[i]);
  return acc / static_cast<double>(a.pixels.size());
}

}  // namespace xspec::img
