#pragma once

#include <vector>

#include "xspec/nn/tensor.hpp"

namespace xspec::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  long step = 0;
  std::vector<std::vector<T>> m;  // first moments, one per parameter
  std::vector<std::vector<T>> v;  // second moments

  AdamState() = default;
  explicit AdamState(AdamConfig c) : config(c) {}
};

// One bias-corrected Adam update. Parameters whose gradient was never
// populated are treated as having zero gradient.
template <typename T>
void adam_step(const std::vector<Tensor<T>>& params, AdamState<T>& state);

}  // namespace xspec::nn
