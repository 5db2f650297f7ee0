#pragma once

#include <vector>

#include "xspec/gan/translator_config.hpp"
#include "xspec/nn/layers.hpp"

namespace xspec::gan {

// U-Net with depth log2(image_size): stride-2 encoder blocks down to a 1x1
// bottleneck, mirrored transposed-convolution decoder with skip
// concatenation and a tanh head. Dropout in the three innermost decoder
// blocks carries the noise input and stays active at inference.
template <typename T>
class Generator {
 public:
  Generator() = default;
  Generator(const TranslatorConfig& config, Rng& init_rng);

  // x [N, in_channels, S, S] in [-1, 1] -> [N, out_channels, S, S].
  // kTrain updates batch-norm running statistics.
  nn::Tensor<T> forward(const nn::Tensor<T>& x, nn::NormMode mode, Rng& dropout_rng) const;

  nn::ParamList<T> parameters() const;
  int depth() const { return static_cast<int>(down_.size()); }
  int image_size() const { return image_size_; }
  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }

 private:
  int image_size_ = 0;
  int in_channels_ = 1;
  int out_channels_ = 1;
  T dropout_ = T(0.5);
  std::vector<nn::Conv2d<T>> down_;
  std::vector<nn::BatchNorm<T>> down_norm_;  // entry i unused when !down_has_norm_[i]
  std::vector<bool> down_has_norm_;
  std::vector<nn::ConvTranspose2d<T>> up_;    // up_[j] produces level j-1 features
  std::vector<nn::BatchNorm<T>> up_norm_;
};

// Depth of the U-Net for an image size; throws for non-powers of two.
int unet_depth(int image_size);

}  // namespace xspec::gan
