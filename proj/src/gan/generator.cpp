#include "xspec/gan/generator.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace xspec::gan {

using nn::NormMode;
using nn::Tensor;

int unet_depth(int image_size) {
  if (image_size < 8 || !std::has_single_bit(static_cast<unsigned>(image_size)))
    throw std::invalid_argument("generator image size must be a power of two >= 8, got " +
                                std::to_string(image_size));
  return std::countr_zero(static_cast<unsigned>(image_size));
}

namespace {

int level_channels(int ngf, int level) { return ngf * std::min(1 << level, 8); }

template <typename T>
Tensor<T> norm(const nn::BatchNorm<T>& bn, const Tensor<T>& x, NormMode mode) {
  Tensor<T> mean = bn.running_mean, var = bn.running_var;
  return nn::batch_norm(x, bn.gamma, bn.beta, mean, var, mode, bn.momentum, bn.eps);
}

}  // namespace

template <typename T>
Generator<T>::Generator(const TranslatorConfig& config, Rng& rng)
    : image_size_(config.image_size),
      in_channels_(config.in_channels),
      out_channels_(config.out_channels),
      dropout_(static_cast<T>(config.dropout)) {
  const int d = unet_depth(config.image_size);
  for (int i = 0; i < d; ++i) {
    const int in = i == 0 ? config.in_channels : level_channels(config.ngf, i - 1);
    const int out = level_channels(config.ngf, i);
    const bool has_norm = i > 0 && i < d - 1;
    down_.emplace_back(in, out, 4, 2, 1, !has_norm, rng);
    down_norm_.emplace_back(out, &rng);
    down_has_norm_.push_back(has_norm);
  }
  for (int j = 0; j < d; ++j) {
    const int in = j == d - 1 ? level_channels(config.ngf, j) : 2 * level_channels(config.ngf, j);
    const int out = j == 0 ? config.out_channels : level_channels(config.ngf, j - 1);
    up_.emplace_back(in, out, 4, 2, 1, j == 0, rng);
    up_norm_.emplace_back(out, &rng);
  }
}

template <typename T>
Tensor<T> Generator<T>::forward(const Tensor<T>& x, NormMode mode, Rng& dropout_rng) const {
  if (x.ndim() != 4 || x.dim(1) != in_channels_ || x.dim(2) != image_size_ || x.dim(3) != image_size_)
    throw nn::DimensionError("generator expects [N," + std::to_string(in_channels_) + "," +
                             std::to_string(image_size_) + "," + std::to_string(image_size_) + "], got " +
                             nn::shape_str(x.shape()));
  const int d = depth();
  std::vector<Tensor<T>> skips;
  Tensor<T> h = x;
  for (int i = 0; i < d; ++i) {
    if (i > 0) h = nn::leaky_relu(h, T(0.2));
    h = down_[i](h);
    if (down_has_norm_[i]) h = norm(down_norm_[i], h, mode);
    skips.push_back(h);
  }
  for (int j = d - 1; j >= 0; --j) {
    h = up_[j](nn::relu(h));
    if (j == 0) return nn::tanh(h);
    h = norm(up_norm_[j], h, mode);
    if (j >= d - 3 && dropout_ > 0) h = nn::dropout(h, dropout_, dropout_rng);
    h = nn::concat_channels(h, skips[static_cast<std::size_t>(j - 1)]);
  }
  return h;
}

template <typename T>
nn::ParamList<T> Generator<T>::parameters() const {
  nn::ParamList<T> out;
  for (std::size_t i = 0; i < down_.size(); ++i) {
    out.append("down" + std::to_string(i) + ".conv.", down_[i].parameters());
    if (down_has_norm_[i]) out.append("down" + std::to_string(i) + ".norm.", down_norm_[i].parameters());
  }
  for (std::size_t j = 0; j < up_.size(); ++j) {
    out.append("up" + std::to_string(j) + ".conv.", up_[j].parameters());
    if (j > 0) out.append("up" + std::to_string(j) + ".norm.", up_norm_[j].parameters());
  }
  return out;
}

template class Generator<float>;
template class Generator<double>;

}  // namespace xspec::gan
