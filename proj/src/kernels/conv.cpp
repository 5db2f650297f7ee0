#include "xspec/kernels/conv.hpp"

#include <algorithm>
#include <vector>

namespace xspec::kernels {

namespace serial {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> w,
                    std::span<T> out) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int oc = 0; oc < g.out_channels; ++oc) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        T acc = 0;
        for (int ic = 0; ic < g.in_channels; ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = y * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = x * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              acc += in[(static_cast<long>(ic) * g.in_h + iy) * g.in_w + ix] *
                     w[((static_cast<long>(oc) * g.in_channels + ic) * k + ky) * k + kx];
            }
          }
        }
        out[(static_cast<long>(oc) * oh + y) * ow + x] = acc;
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> dout,
                           std::span<const T> w, std::span<T> din) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int oc = 0; oc < g.out_channels; ++oc) {
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const T d = dout[(static_cast<long>(oc) * oh + y) * ow + x];
        for (int ic = 0; ic < g.in_channels; ++ic) {
          for (int ky = 0; ky < k; ++ky) {
            const int iy = y * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = x * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              din[(static_cast<long>(ic) * g.in_h + iy) * g.in_w + ix] +=
                  d * w[((static_cast<long>(oc) * g.in_channels + ic) * k + ky) * k + kx];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> in,
                            std::span<const T> dout, std::span<T> dw) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  for (int oc = 0; oc < g.out_channels; ++oc) {
    for (int ic = 0; ic < g.in_channels; ++ic) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          T acc = 0;
          for (int y = 0; y < oh; ++y) {
            const int iy = y * g.stride - g.pad + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int x = 0; x < ow; ++x) {
              const int ix = x * g.stride - g.pad + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              acc += dout[(static_cast<long>(oc) * oh + y) * ow + x] *
                     in[(static_cast<long>(ic) * g.in_h + iy) * g.in_w + ix];
            }
          }
          dw[((static_cast<long>(oc) * g.in_channels + ic) * k + ky) * k + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
void linear_forward(int batch, int in_features, int out_features, std::span<const T> x,
                    std::span<const T> w, std::span<T> y) {
  for (int n = 0; n < batch; ++n) {
    for (int o = 0; o < out_features; ++o) {
      T acc = 0;
      for (int i = 0; i < in_features; ++i)
        acc += x[static_cast<long>(n) * in_features + i] * w[static_cast<long>(o) * in_features + i];
      y[static_cast<long>(n) * out_features + o] = acc;
    }
  }
}

}  // namespace serial

namespace parallel {

namespace {

// col has shape (in_channels * k * k, out_h * out_w).
template <typename T>
void im2col(const ConvGeometry& g, const T* in, T* col) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  const long plane = static_cast<long>(oh) * ow;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < g.in_channels; ++c) {
    const T* src = in + static_cast<long>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        T* dst = col + ((static_cast<long>(c) * k + ky) * k + kx) * plane;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * g.stride - g.pad + ky;
          T* row = dst + static_cast<long>(y) * ow;
          if (iy < 0 || iy >= g.in_h) {
            std::fill(row, row + ow, T(0));
            continue;
          }
          const T* srow = src + static_cast<long>(iy) * g.in_w;
          for (int x = 0; x < ow; ++x) {
            const int ix = x * g.stride - g.pad + kx;
            row[x] = (ix >= 0 && ix < g.in_w) ? srow[ix] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-adds col back into the image; each channel is owned by one thread.
template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, T* out) {
  const int oh = g.out_h(), ow = g.out_w(), k = g.kernel;
  const long plane = static_cast<long>(oh) * ow;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < g.in_channels; ++c) {
    T* dst = out + static_cast<long>(c) * g.in_h * g.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const T* src = col + ((static_cast<long>(c) * k + ky) * k + kx) * plane;
        for (int y = 0; y < oh; ++y) {
          const int iy = y * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          T* drow = dst + static_cast<long>(iy) * g.in_w;
          const T* srow = src + static_cast<long>(y) * ow;
          for (int x = 0; x < ow; ++x) {
            const int ix = x * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) drow[ix] += srow[x];
          }
        }
      }
    }
  }
}

constexpr int kBlock = 4;

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> w,
                    std::span<T> out) {
  const long rows = static_cast<long>(g.in_channels) * g.kernel * g.kernel;
  const long plane = static_cast<long>(g.out_h()) * g.out_w();
  std::vector<T> col(static_cast<std::size_t>(rows * plane));
  im2col(g, in.data(), col.data());
  const T* cp = col.data();
  const int blocks = (g.out_channels + kBlock - 1) / kBlock;

#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const int oc0 = b * kBlock;
    const int n = std::min(kBlock, g.out_channels - oc0);
    T* o[kBlock];
    const T* wr[kBlock];
    for (int j = 0; j < kBlock; ++j) {
      const int oc = oc0 + std::min(j, n - 1);
      o[j] = out.data() + oc * plane;
      wr[j] = w.data() + oc * rows;
    }
    for (int j = 0; j < n; ++j) std::fill(o[j], o[j] + plane, T(0));
    if (n == kBlock) {
      T* o0 = o[0];
      T* o1 = o[1];
      T* o2 = o[2];
      T* o3 = o[3];
      for (long r = 0; r < rows; ++r) {
        const T* c = cp + r * plane;
        const T w0 = wr[0][r], w1 = wr[1][r], w2 = wr[2][r], w3 = wr[3][r];
#pragma omp simd
        for (long p = 0; p < plane; ++p) {
          const T v = c[p];
          o0[p] += w0 * v;
          o1[p] += w1 * v;
          o2[p] += w2 * v;
          o3[p] += w3 * v;
        }
      }
    } else {
      for (int j = 0; j < n; ++j) {
        T* oj = o[j];
        for (long r = 0; r < rows; ++r) {
          const T* c = cp + r * plane;
          const T wv = wr[j][r];
#pragma omp simd
          for (long p = 0; p < plane; ++p) oj[p] += wv * c[p];
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> dout,
                           std::span<const T> w, std::span<T> din) {
  const long rows = static_cast<long>(g.in_channels) * g.kernel * g.kernel;
  const long plane = static_cast<long>(g.out_h()) * g.out_w();
  std::vector<T> dcol(static_cast<std::size_t>(rows * plane), T(0));
  const T* dp = dout.data();
  const T* wp = w.data();

#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    T* dc = dcol.data() + r * plane;
    int oc = 0;
    for (; oc + kBlock <= g.out_channels; oc += kBlock) {
      const T w0 = wp[oc * rows + r], w1 = wp[(oc + 1) * rows + r];
      const T w2 = wp[(oc + 2) * rows + r], w3 = wp[(oc + 3) * rows + r];
      const T* d0 = dp + oc * plane;
      const T* d1 = d0 + plane;
      const T* d2 = d1 + plane;
      const T* d3 = d2 + plane;
#pragma omp simd
      for (long p = 0; p < plane; ++p)
        dc[p] = (((dc[p] + w0 * d0[p]) + w1 * d1[p]) + w2 * d2[p]) + w3 * d3[p];
    }
    for (; oc < g.out_channels; ++oc) {
      const T wv = wp[oc * rows + r];
      const T* d = dp + oc * plane;
#pragma omp simd
      for (long p = 0; p < plane; ++p) dc[p] += wv * d[p];
    }
  }
  col2im_add(g, dcol.data(), din.data());
}

template <typename T>
void conv2d_backward_weight(const ConvGeometry& g, std::span<const T> in,
                            std::span<const T> dout, std::span<T> dw) {
  const long rows = static_cast<long>(g.in_channels) * g.kernel * g.kernel;
  const long plane = static_cast<long>(g.out_h()) * g.out_w();
  std::vector<T> col(static_cast<std::size_t>(rows * plane));
  im2col(g, in.data(), col.data());
  const T* cp = col.data();

  if (plane >= rows) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < g.out_channels; ++oc) {
      const T* d = dout.data() + oc * plane;
      T* dwr = dw.data() + oc * rows;
      for (long r = 0; r < rows; ++r) {
        const T* c = cp + r * plane;
        T acc = 0;
#pragma omp simd reduction(+ : acc)
        for (long p = 0; p < plane; ++p) acc += d[p] * c[p];
        dwr[r] += acc;
      }
    }
    return;
  }

  // Small output planes: transposed lowering (plane, rows) turns the update
  // into contiguous row updates dw[oc, :] += dout[oc, p] * colT[p, :].
  std::vector<T> colT(col.size());
  for (long r = 0; r < rows; ++r)
    for (long p = 0; p < plane; ++p) colT[p * rows + r] = cp[r * plane + p];
  const T* ct = colT.data();

#pragma omp parallel for schedule(static)
  for (int oc = 0; oc < g.out_channels; ++oc) {
    const T* d = dout.data() + oc * plane;
    T* dwr = dw.data() + oc * rows;
    for (long p = 0; p < plane; ++p) {
      const T dv = d[p];
      const T* c = ct + p * rows;
#pragma omp simd
      for (long r = 0; r < rows; ++r) dwr[r] += dv * c[r];
    }
  }
}

template <typename T>
void linear_forward(int batch, int in_features, int out_features, std::span<const T> x,
                    std::span<const T> w, std::span<T> y) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < batch; ++n) {
    for (int o = 0; o < out_features; ++o) {
      const T* xr = x.data() + static_cast<long>(n) * in_features;
      const T* wr = w.data() + static_cast<long>(o) * in_features;
      T acc = 0;
#pragma omp simd reduction(+ : acc)
      for (int i = 0; i < in_features; ++i) acc += xr[i] * wr[i];
      y[static_cast<long>(n) * out_features + o] = acc;
    }
  }
}

}  // namespace parallel

#define XSPEC_INSTANTIATE_CONV(NS, T)                                                     \
  template void NS::conv2d_forward<T>(const ConvGeometry&, std::span<const T>,            \
                                      std::span<const T>, std::span<T>);                  \
  template void NS::conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>,     \
                                             std::span<const T>, std::span<T>);           \
  template void NS::conv2d_backward_weight<T>(const ConvGeometry&, std::span<const T>,    \
                                              std::span<const T>, std::span<T>);          \
  template void NS::linear_forward<T>(int, int, int, std::span<const T>, std::span<const T>, \
                                      std::span<T>);

XSPEC_INSTANTIATE_CONV(serial, float)
XSPEC_INSTANTIATE_CONV(serial, double)
XSPEC_INSTANTIATE_CONV(parallel, float)
XSPEC_INSTANTIATE_CONV(parallel, double)

}  // namespace xspec::kernels
