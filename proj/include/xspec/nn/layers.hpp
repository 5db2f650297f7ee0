#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xspec/nn/ops.hpp"
#include "xspec/nn/tensor.hpp"
#include "xspec/util/rng.hpp"

namespace xspec::nn {

enum class LayerKind { kConv2d, kConvTranspose2d, kBatchNorm, kLinear };

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

// Trainable parameters and persistent buffers of a model, in a fixed order.
template <typename T>
struct ParamList {
  std::vector<NamedTensor<T>> params;   // receive gradients
  std::vector<NamedTensor<T>> buffers;  // e.g. batch-norm running statistics

  void append(const std::string& prefix, const ParamList& other) {
    for (const auto& p : other.params) params.push_back({prefix + p.name, p.tensor});
    for (const auto& b : other.buffers) buffers.push_back({prefix + b.name, b.tensor});
  }
  std::vector<Tensor<T>> tensors() const {
    std::vector<Tensor<T>> out;
    for (const auto& p : params) out.push_back(p.tensor);
    return out;
  }
  // Parameters followed by buffers; the order used for checkpoints.
  std::vector<NamedTensor<T>> all() const {
    std::vector<NamedTensor<T>> out = params;
    out.insert(out.end(), buffers.begin(), buffers.end());
    return out;
  }
  void zero_grad() const {
    for (const auto& p : params) {
      Tensor<T> t = p.tensor;
      t.zero_grad();
    }
  }
  void set_requires_grad(bool r) const {
    for (const auto& p : params) {
      Tensor<T> t = p.tensor;
      t.set_requires_grad(r);
    }
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& p : params) n += p.tensor.numel();
    return n;
  }
};

// Gaussian N(0, std^2) weights, the convention for adversarial image models.
template <typename T>
Tensor<T> gaussian_tensor(Shape shape, double stddev, Rng& rng, double mean = 0.0);

template <typename T>
struct Conv2d {
  Tensor<T> weight;  // [out, in, k, k]
  Tensor<T> bias;    // [out] or undefined
  int stride = 1;
  int pad = 0;

  Conv2d() = default;
  Conv2d(int in, int out, int kernel, int stride, int pad, bool with_bias, Rng& rng,
         double init_std = 0.02);
  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, stride, pad); }
  ParamList<T> parameters() const;
  LayerKind kind() const { return LayerKind::kConv2d; }
};

template <typename T>
struct ConvTranspose2d {
  Tensor<T> weight;  // [in, out, k, k]
  Tensor<T> bias;
  int stride = 1;
  int pad = 0;

  ConvTranspose2d() = default;
  ConvTranspose2d(int in, int out, int kernel, int stride, int pad, bool with_bias, Rng& rng,
                  double init_std = 0.02);
  Tensor<T> operator()(const Tensor<T>& x) const {
    return conv_transpose2d(x, weight, bias, stride, pad);
  }
  ParamList<T> parameters() const;
  LayerKind kind() const { return LayerKind::kConvTranspose2d; }
};

template <typename T>
struct BatchNorm {
  Tensor<T> gamma;
  Tensor<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  T momentum = T(0.1);
  T eps = T(1e-5);

  BatchNorm() = default;
  // gamma ~ N(1, init_std^2) when rng is given, else exactly 1.
  BatchNorm(int channels, Rng* rng = nullptr, double init_std = 0.02);
  Tensor<T> operator()(const Tensor<T>& x, NormMode mode) {
    return batch_norm(x, gamma, beta, running_mean, running_var, mode, momentum, eps);
  }
  ParamList<T> parameters() const;
  LayerKind kind() const { return LayerKind::kBatchNorm; }
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // [out, in]
  Tensor<T> bias;    // [out]

  Linear() = default;
  // Uniform(-1/sqrt(in), 1/sqrt(in)) initialization.
  Linear(int in, int out, Rng& rng);
  Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, weight, bias); }
  ParamList<T> parameters() const;
  LayerKind kind() const { return LayerKind::kLinear; }
};

// Copies every value of src into dst; shapes and names must agree.
template <typename T>
void copy_values(const ParamList<T>& src, const ParamList<T>& dst);

}  // namespace xspec::nn
