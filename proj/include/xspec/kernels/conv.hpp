#pragma once

#include <span>
#include <stdexcept>

namespace xspec::kernels {

// Geometry of a single-sample 2-D convolution in NCHW layout. Square kernels
// and symmetric zero padding only.
struct ConvGeometry {
  int in_channels = 0;
  int in_h = 0;
  int in_w = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;

  int out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  long in_size() const { return static_cast<long>(in_channels) * in_h * in_w; }
  long out_size() const { return static_cast<long>(out_channels) * out_h() * out_w(); }
  long weight_size() const {
    return static_cast<long>(out_channels) * in_channels * kernel * kernel;
  }

  void validate() const {
    if (in_channels <= 0 || out_channels <= 0 || kernel <= 0)
      throw std::invalid_argument("conv geometry: channels and kernel must be positive");
    if (stride < 1) throw std::invalid_argument("conv geometry: stride must be >= 1");
    if (pad < 0) throw std::invalid_argument("conv geometry: negative padding");
    if (in_h + 2 * pad < kernel || in_w + 2 * pad < kernel)
      throw std::invalid_argument("conv geometry: kernel larger than padded input");
  }
};

// Weights are laid out (out_channels, in_channels, k, k). The three kernels
// of a convolution layer:
//   forward:         out = conv(in, w)
//   backward_input:  din += conv^T(dout, w)
//   backward_weight: dw  += correlation of in with dout
// Transposed convolution reuses these with the roles of forward and
// backward_input swapped.

// Direct nested-loop reference. Slow; kept for testing the parallel kernels.
namespace serial {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> w,
                    std::span<T> out);

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> dout,
                           std::span<const T> w, std::span<T> din);

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> in,
                            std::span<const T> dout, std::span<T> dw);

}  // namespace serial

// im2col lowering with OpenMP over output rows of the lowered product. Each
// output element is produced by exactly one thread with a fixed summation
// order, so results are identical for any thread count.
namespace parallel {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> w,
                    std::span<T> out);

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> dout,
                           std::span<const T> w, std::span<T> din);

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> in,
                            std::span<const T> dout, std::span<T> dw);

}  // namespace parallel

// Dense product for fully connected layers: y[n, o] = sum_i x[n, i] * w[o, i].
namespace serial {
template <typename T>
void linear_forward(int batch, int in_features, int out_features, std::span<const T> x,
                    std::span<const T> w, std::span<T> y);
}
namespace parallel {
template <typename T>
void linear_forward(int batch, int in_features, int out_features, std::span<const T> x,
                    std::span<const T> w, std::span<T> y);
}

}  // namespace xspec::kernels
