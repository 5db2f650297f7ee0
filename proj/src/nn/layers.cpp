#include "xspec/nn/layers.hpp"

#include <algorithm>
#include <cmath>

namespace xspec::nn {

template <typename T>
Tensor<T> gaussian_tensor(Shape shape, double stddev, Rng& rng, double mean) {
  Tensor<T> t(std::move(shape), T(0), true);
  for (auto& v : t.data()) v = static_cast<T>(rng.normal(mean, stddev));
  return t;
}

template <typename T>
Conv2d<T>::Conv2d(int in, int out, int kernel, int stride_, int pad_, bool with_bias, Rng& rng,
                  double init_std)
    : weight(gaussian_tensor<T>({out, in, kernel, kernel}, init_std, rng)),
      stride(stride_),
      pad(pad_) {
  if (with_bias) bias = Tensor<T>({out}, T(0), true);
}

template <typename T>
ParamList<T> Conv2d<T>::parameters() const {
  ParamList<T> p;
  p.params.push_back({"weight", weight});
  if (bias.defined()) p.params.push_back({"bias", bias});
  return p;
}

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(int in, int out, int kernel, int stride_, int pad_,
                                    bool with_bias, Rng& rng, double init_std)
    : weight(gaussian_tensor<T>({in, out, kernel, kernel}, init_std, rng)),
      stride(stride_),
      pad(pad_) {
  if (with_bias) bias = Tensor<T>({out}, T(0), true);
}

template <typename T>
ParamList<T> ConvTranspose2d<T>::parameters() const {
  ParamList<T> p;
  p.params.push_back({"weight", weight});
  if (bias.defined()) p.params.push_back({"bias", bias});
  return p;
}

template <typename T>
BatchNorm<T>::BatchNorm(int channels, Rng* rng, double init_std)
    : gamma(rng ? gaussian_tensor<T>({channels}, init_std, *rng, 1.0)
                : Tensor<T>({channels}, T(1), true)),
      beta({channels}, T(0), true),
      running_mean({channels}, T(0)),
      running_var({channels}, T(1)) {}

template <typename T>
ParamList<T> BatchNorm<T>::parameters() const {
  ParamList<T> p;
  p.params.push_back({"gamma", gamma});
  p.params.push_back({"beta", beta});
  p.buffers.push_back({"running_mean", running_mean});
  p.buffers.push_back({"running_var", running_var});
  return p;
}

template <typename T>
Linear<T>::Linear(int in, int out, Rng& rng)
    : weight({out, in}, T(0), true), bias({out}, T(0), true) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : weight.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  for (auto& v : bias.data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
ParamList<T> Linear<T>::parameters() const {
  ParamList<T> p;
  p.params.push_back({"weight", weight});
  p.params.push_back({"bias", bias});
  return p;
}

template <typename T>
void copy_values(const ParamList<T>& src, const ParamList<T>& dst) {
  const auto a = src.all();
  const auto b = dst.all();
  if (a.size() != b.size()) throw DimensionError("copy_values: parameter count mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].tensor.shape() != b[i].tensor.shape())
      throw DimensionError("copy_values: mismatch at " + a[i].name);
    Tensor<T> d = b[i].tensor;
    std::copy(a[i].tensor.data().begin(), a[i].tensor.data().end(), d.data().begin());
  }
}

#define XSPEC_INSTANTIATE_LAYERS(T)                                         \
  template Tensor<T> gaussian_tensor<T>(Shape, double, Rng&, double);       \
  template struct Conv2d<T>;                                                \
  template struct ConvTranspose2d<T>;                                       \
  template struct BatchNorm<T>;                                             \
  template struct Linear<T>;                                                \
  template void copy_values<T>(const ParamList<T>&, const ParamList<T>&);

XSPEC_INSTANTIATE_LAYERS(float)
XSPEC_INSTANTIATE_LAYERS(double)

}  // namespace xspec::nn
