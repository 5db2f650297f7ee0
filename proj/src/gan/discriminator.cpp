#include "xspec/gan/discriminator.hpp"

#include <algorithm>

namespace xspec::gan {

using nn::NormMode;
using nn::Tensor;

int receptive_field(const std::vector<ConvSpec>& stack) {
  int r = 1, j = 1;
  for (const auto& l : stack) {
    r += (l.kernel - 1) * j;
    j *= l.stride;
  }
  return r;
}

std::vector<ConvSpec> patchgan_stack(int n_layers) {
  std::vector<ConvSpec> stack(static_cast<std::size_t>(n_layers), ConvSpec{4, 2});
  stack.push_back({4, 1});
  stack.push_back({4, 1});
  return stack;
}

std::string coverage_warning(int input_size, int n_layers) {
  const int rf = receptive_field(patchgan_stack(n_layers));
  if (input_size >= rf) return {};
  return "discriminator input " + std::to_string(input_size) + "x" + std::to_string(input_size) +
         " is smaller than its " + std::to_string(rf) + "x" + std::to_string(rf) +
         " receptive field; patches see zero padding";
}

template <typename T>
Discriminator<T>::Discriminator(const TranslatorConfig& config, Rng& rng) {
  const int n = config.disc_layers;
  int in = config.in_channels + config.out_channels;
  for (int i = 0; i <= n; ++i) {
    const int out = config.ndf * std::min(1 << i, 8);
    const int stride = i < n ? 2 : 1;
    const bool has_norm = i > 0;
    conv_.emplace_back(in, out, 4, stride, 1, !has_norm, rng);
    norm_.emplace_back(out, &rng);
    has_norm_.push_back(has_norm);
    in = out;
  }
  conv_.emplace_back(in, 1, 4, 1, 1, true, rng);
  norm_.emplace_back();
  has_norm_.push_back(false);
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& x, const Tensor<T>& y, NormMode mode) const {
  if (x.ndim() != 4 || y.ndim() != 4 || x.dim(0) != y.dim(0) || x.dim(2) != y.dim(2) ||
      x.dim(3) != y.dim(3))
    throw nn::DimensionError("discriminator: condition " + nn::shape_str(x.shape()) +
                             " and candidate " + nn::shape_str(y.shape()) + " do not pair");
  if (output_size(x.dim(2)) <= 0 || output_size(x.dim(3)) <= 0)
    throw nn::DimensionError("discriminator: input " + nn::shape_str(x.shape()) +
                             " is too small for " + std::to_string(layers()) + " conv layers");
  Tensor<T> h = nn::concat_channels(x, y);
  const std::size_t last = conv_.size() - 1;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    h = conv_[i](h);
    if (i == last) break;
    if (has_norm_[i]) {
      Tensor<T> mean = norm_[i].running_mean, var = norm_[i].running_var;
      h = nn::batch_norm(h, norm_[i].gamma, norm_[i].beta, mean, var, mode, norm_[i].momentum,
                         norm_[i].eps);
    }
    h = nn::leaky_relu(h, T(0.2));
  }
  return nn::sigmoid(h);
}

template <typename T>
nn::ParamList<T> Discriminator<T>::parameters() const {
  nn::ParamList<T> out;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    out.append("layer" + std::to_string(i) + ".conv.", conv_[i].parameters());
    if (has_norm_[i]) out.append("layer" + std::to_string(i) + ".norm.", norm_[i].parameters());
  }
  return out;
}

template <typename T>
int Discriminator<T>::receptive_field() const {
  std::vector<ConvSpec> stack;
  for (const auto& c : conv_) stack.push_back({c.weight.dim(2), c.stride});
  return gan::receptive_field(stack);
}

template <typename T>
int Discriminator<T>::output_size(int input_size) const {
  int s = input_size;
  for (const auto& c : conv_) {
    const int k = c.weight.dim(2);
    if (s + 2 * c.pad < k) return 0;
    s = (s + 2 * c.pad - k) / c.stride + 1;
  }
  return s;
}

template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace xspec::gan
