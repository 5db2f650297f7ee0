#pragma once

#include <string>
#include <vector>

#include "xspec/gan/translator_config.hpp"
#include "xspec/nn/layers.hpp"

namespace xspec::gan {

// PatchGAN: n_layers stride-2 k4 blocks (no norm on the first), one stride-1
// k4 block with norm, a stride-1 k4 projection to one channel and a sigmoid.
// With three stride-2 blocks a 256x256 pair maps to 30x30 patches of 70x70.
template <typename T>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const TranslatorConfig& config, Rng& init_rng);

  // Scores the channel concatenation of condition x and candidate y.
  // Returns [N, 1, H', W'] with values in (0, 1).
  nn::Tensor<T> forward(const nn::Tensor<T>& x, const nn::Tensor<T>& y, nn::NormMode mode) const;

  nn::ParamList<T> parameters() const;
  int layers() const { return static_cast<int>(conv_.size()); }
  int receptive_field() const;
  // Output map side for a square input, or 0 when the input is too small.
  int output_size(int input_size) const;

 private:
  std::vector<nn::Conv2d<T>> conv_;
  std::vector<nn::BatchNorm<T>> norm_;
  std::vector<bool> has_norm_;
};

struct ConvSpec {
  int kernel;
  int stride;
};

// Receptive field of a conv stack from r <- r + (k-1) j, j <- j s.
int receptive_field(const std::vector<ConvSpec>& stack);
std::vector<ConvSpec> patchgan_stack(int n_layers);

// Empty when an input of this size covers at least one full receptive field,
// otherwise a human-readable warning.
std::string coverage_warning(int input_size, int n_layers);

}  // namespace xspec::gan
