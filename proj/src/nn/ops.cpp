#include "xspec/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xspec/kernels/conv.hpp"

namespace xspec::nn {

using detail::make_result;

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

template <typename T>
void require_ndim(const Tensor<T>& a, int n, const char* op) {
  if (a.ndim() != n)
    throw DimensionError(std::string(op) + ": expected " + std::to_string(n) +
                         "-d tensor, got " + shape_str(a.shape()));
}

// Elementwise map with derivative expressed through input x and output y.
template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& a, F f, D dfdx) {
  std::vector<T> out(a.numel());
  const auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result<T>(a.shape(), std::move(out), {a.node()}, [dfdx](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.data.size(); ++i)
      p.grad[i] += self.grad[i] * dfdx(p.data[i], self.data[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node(), b.node()}, [](Node<T>& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node(), b.node()}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] -= self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_result<T>(a.shape(), std::move(out), {a.node(), b.node()}, [](Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.data[i];
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  return unary(a, [s](T x) { return s * x; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
  return unary(a, [s](T x) { return x + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a.data()) acc += v;
  return make_result<T>({1}, {acc}, {a.node()}, [](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (auto& g : p.grad) g += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  T acc = 0;
  for (T v : a.data()) acc += v;
  const T n = static_cast<T>(a.numel());
  return make_result<T>({1}, {acc / n}, {a.node()}, [n](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    const T g = self.grad[0] / n;
    for (auto& v : p.grad) v += g;
  });
}

template <typename T>
Tensor<T> sum_rows(const Tensor<T>& a) {
  require_ndim(a, 2, "sum_rows");
  const int n = a.dim(0), d = a.dim(1);
  std::vector<T> out(static_cast<std::size_t>(n), T(0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out[i] += a.data()[static_cast<std::size_t>(i) * d + j];
  return make_result<T>({n}, std::move(out), {a.node()}, [n, d](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) p.grad[static_cast<std::size_t>(i) * d + j] += self.grad[i];
  });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
  return unary(
      a, [](T x) { return std::abs(x); },
      [](T x, T) { return x > 0 ? T(1) : (x < 0 ? T(-1) : T(0)); });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  return unary(a, [](T x) { return x * x; }, [](T x, T) { return 2 * x; });
}

template <typename T>
Tensor<T> log_clamped(const Tensor<T>& a, T floor, std::size_t* clamp_count) {
  if (clamp_count)
    for (T v : a.data())
      if (!(v > floor)) ++*clamp_count;
  return unary(
      a, [floor](T x) { return std::log(std::max(x, floor)); },
      [floor](T x, T) { return x > floor ? T(1) / x : T(0); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary(a, [](T x) { return x > 0 ? x : T(0); }, [](T x, T) { return x > 0 ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  return unary(
      a, [slope](T x) { return x > 0 ? x : slope * x; },
      [slope](T x, T) { return x > 0 ? T(1) : slope; });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return unary(a, [](T x) { return std::tanh(x); }, [](T, T y) { return 1 - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return unary(
      a,
      [](T x) {
        if (x >= 0) return T(1) / (1 + std::exp(-x));
        const T e = std::exp(x);
        return e / (1 + e);
      },
      [](T, T y) { return y * (1 - y); });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& a, T p, Rng& rng) {
  if (!(p >= 0 && p < 1)) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  if (p == 0) return unary(a, [](T x) { return x; }, [](T, T) { return T(1); });
  const T keep_scale = T(1) / (1 - p);
  std::vector<T> mask(a.numel());
  for (auto& m : mask) m = rng.uniform() >= static_cast<double>(p) ? keep_scale : T(0);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * mask[i];
  return make_result<T>(a.shape(), std::move(out), {a.node()},
                        [mask = std::move(mask)](Node<T>& self) {
                          auto& p = *self.parents[0];
                          if (!p.requires_grad) return;
                          p.ensure_grad();
                          for (std::size_t i = 0; i < mask.size(); ++i)
                            p.grad[i] += self.grad[i] * mask[i];
                        });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    throw DimensionError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  return make_result<T>(std::move(shape), a.storage(), {a.node()}, [](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.ndim() != b.ndim() || a.ndim() < 2 || a.dim(0) != b.dim(0))
    throw DimensionError("concat_channels: incompatible " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  for (int i = 2; i < a.ndim(); ++i)
    if (a.dim(i) != b.dim(i))
      throw DimensionError("concat_channels: spatial mismatch " + shape_str(a.shape()) + " vs " +
                           shape_str(b.shape()));
  const int n = a.dim(0);
  const std::size_t sa = a.numel() / n, sb = b.numel() / n;
  Shape shape = a.shape();
  shape[1] = a.dim(1) + b.dim(1);
  std::vector<T> out(a.numel() + b.numel());
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.data().begin() + i * sa, sa, out.begin() + i * (sa + sb));
    std::copy_n(b.data().begin() + i * sb, sb, out.begin() + i * (sa + sb) + sa);
  }
  return make_result<T>(std::move(shape), std::move(out), {a.node(), b.node()},
                        [n, sa, sb](Node<T>& self) {
                          auto& pa = *self.parents[0];
                          auto& pb = *self.parents[1];
                          if (pa.requires_grad) pa.ensure_grad();
                          if (pb.requires_grad) pb.ensure_grad();
                          for (int i = 0; i < n; ++i) {
                            const T* g = self.grad.data() + i * (sa + sb);
                            if (pa.requires_grad)
                              for (std::size_t j = 0; j < sa; ++j) pa.grad[i * sa + j] += g[j];
                            if (pb.requires_grad)
                              for (std::size_t j = 0; j < sb; ++j) pb.grad[i * sb + j] += g[sa + j];
                          }
                        });
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int pad) {
  require_ndim(x, 4, "conv2d input");
  require_ndim(weight, 4, "conv2d weight");
  if (weight.dim(1) != x.dim(1))
    throw DimensionError("conv2d: input has " + std::to_string(x.dim(1)) +
                         " channels, kernel expects " + std::to_string(weight.dim(1)));
  if (weight.dim(2) != weight.dim(3)) throw DimensionError("conv2d: kernel must be square");
  kernels::ConvGeometry g{x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), stride, pad};
  g.validate();
  if (bias.defined() && (bias.numel() != static_cast<std::size_t>(g.out_channels)))
    throw DimensionError("conv2d: bias length mismatch");
  const int n = x.dim(0);
  const long in_sz = g.in_size(), out_sz = g.out_size();
  const long plane = static_cast<long>(g.out_h()) * g.out_w();
  std::vector<T> out(static_cast<std::size_t>(n * out_sz));
  for (int i = 0; i < n; ++i) {
    std::span<T> o(out.data() + i * out_sz, static_cast<std::size_t>(out_sz));
    kernels::parallel::conv2d_forward<T>(g, x.data().subspan(i * in_sz, in_sz), weight.data(), o);
    if (bias.defined())
      for (int c = 0; c < g.out_channels; ++c)
        for (long p = 0; p < plane; ++p) o[c * plane + p] += bias.data()[c];
  }
  std::vector<std::shared_ptr<Node<T>>> parents{x.node(), weight.node()};
  if (bias.defined()) parents.push_back(bias.node());
  return make_result<T>(
      {n, g.out_channels, g.out_h(), g.out_w()}, std::move(out), std::move(parents),
      [g, n, in_sz, out_sz, plane](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        for (int i = 0; i < n; ++i) {
          std::span<const T> dout(self.grad.data() + i * out_sz, static_cast<std::size_t>(out_sz));
          if (px.requires_grad) {
            px.ensure_grad();
            kernels::parallel::conv2d_backward_input<T>(
                g, dout, pw.data, std::span<T>(px.grad.data() + i * in_sz, in_sz));
          }
          if (pw.requires_grad) {
            pw.ensure_grad();
            kernels::parallel::conv2d_backward_weight<T>(
                g, std::span<const T>(px.data.data() + i * in_sz, in_sz), dout, pw.grad);
          }
          if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
            auto& pb = *self.parents[2];
            pb.ensure_grad();
            for (int c = 0; c < g.out_channels; ++c) {
              T acc = 0;
              for (long p = 0; p < plane; ++p) acc += dout[c * plane + p];
              pb.grad[c] += acc;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           int stride, int pad) {
  require_ndim(x, 4, "conv_transpose2d input");
  require_ndim(weight, 4, "conv_transpose2d weight");
  if (weight.dim(0) != x.dim(1))
    throw DimensionError("conv_transpose2d: input has " + std::to_string(x.dim(1)) +
                         " channels, kernel expects " + std::to_string(weight.dim(0)));
  if (weight.dim(2) != weight.dim(3))
    throw DimensionError("conv_transpose2d: kernel must be square");
  if (stride < 1) throw std::invalid_argument("conv_transpose2d: stride must be >= 1");
  const int k = weight.dim(2);
  const int oh = (x.dim(2) - 1) * stride - 2 * pad + k;
  const int ow = (x.dim(3) - 1) * stride - 2 * pad + k;
  if (oh <= 0 || ow <= 0) throw DimensionError("conv_transpose2d: empty output");
  // The adjoint convolution maps the [C', H', W'] output back to [C, H, W].
  kernels::ConvGeometry g{weight.dim(1), oh, ow, weight.dim(0), k, stride, pad};
  g.validate();
  if (g.out_h() != x.dim(2) || g.out_w() != x.dim(3))
    throw DimensionError("conv_transpose2d: inconsistent geometry");
  if (bias.defined() && bias.numel() != static_cast<std::size_t>(g.in_channels))
    throw DimensionError("conv_transpose2d: bias length mismatch");
  const int n = x.dim(0);
  const long in_sz = g.out_size(), out_sz = g.in_size();
  const long plane = static_cast<long>(oh) * ow;
  std::vector<T> out(static_cast<std::size_t>(n * out_sz), T(0));
  for (int i = 0; i < n; ++i) {
    std::span<T> o(out.data() + i * out_sz, static_cast<std::size_t>(out_sz));
    kernels::parallel::conv2d_backward_input<T>(g, x.data().subspan(i * in_sz, in_sz),
                                                weight.data(), o);
    if (bias.defined())
      for (int c = 0; c < g.in_channels; ++c)
        for (long p = 0; p < plane; ++p) o[c * plane + p] += bias.data()[c];
  }
  std::vector<std::shared_ptr<Node<T>>> parents{x.node(), weight.node()};
  if (bias.defined()) parents.push_back(bias.node());
  return make_result<T>(
      {n, g.in_channels, oh, ow}, std::move(out), std::move(parents),
      [g, n, in_sz, out_sz, plane](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pw = *self.parents[1];
        std::vector<T> tmp;
        for (int i = 0; i < n; ++i) {
          std::span<const T> dout(self.grad.data() + i * out_sz, static_cast<std::size_t>(out_sz));
          if (px.requires_grad) {
            px.ensure_grad();
            tmp.assign(static_cast<std::size_t>(in_sz), T(0));
            kernels::parallel::conv2d_forward<T>(g, dout, pw.data, tmp);
            T* dx = px.grad.data() + i * in_sz;
            for (long j = 0; j < in_sz; ++j) dx[j] += tmp[j];
          }
          if (pw.requires_grad) {
            pw.ensure_grad();
            kernels::parallel::conv2d_backward_weight<T>(
                g, dout, std::span<const T>(px.data.data() + i * in_sz, in_sz), pw.grad);
          }
          if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
            auto& pb = *self.parents[2];
            pb.ensure_grad();
            for (int c = 0; c < g.in_channels; ++c) {
              T acc = 0;
              for (long p = 0; p < plane; ++p) acc += dout[c * plane + p];
              pb.grad[c] += acc;
            }
          }
        }
      });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, NormMode mode, T momentum,
                     T eps) {
  if (x.ndim() != 4 && x.ndim() != 2)
    throw DimensionError("batch_norm: expected [N,C,H,W] or [N,C], got " + shape_str(x.shape()));
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t cs = static_cast<std::size_t>(c);
  if (gamma.numel() != cs || beta.numel() != cs || running_mean.numel() != cs ||
      running_var.numel() != cs)
    throw DimensionError("batch_norm: parameter length does not match " + std::to_string(c) +
                         " channels");
  const long plane = x.ndim() == 4 ? static_cast<long>(x.dim(2)) * x.dim(3) : 1;
  const long count = n * plane;
  auto idx = [c, plane](int i, int ch, long p) {
    return (static_cast<long>(i) * c + ch) * plane + p;
  };

  std::vector<T> mu(cs), invstd(cs);
  const bool batch_stats = mode != NormMode::kRunning;
  for (int ch = 0; ch < c; ++ch) {
    if (batch_stats) {
      T m = 0;
      for (int i = 0; i < n; ++i)
        for (long p = 0; p < plane; ++p) m += x.data()[idx(i, ch, p)];
      m /= static_cast<T>(count);
      T v = 0;
      for (int i = 0; i < n; ++i)
        for (long p = 0; p < plane; ++p) {
          const T d = x.data()[idx(i, ch, p)] - m;
          v += d * d;
        }
      v /= static_cast<T>(count);
      mu[ch] = m;
      invstd[ch] = T(1) / std::sqrt(v + eps);
      if (mode == NormMode::kTrain) {
        const T unbiased = count > 1 ? v * static_cast<T>(count) / static_cast<T>(count - 1) : v;
        running_mean.data()[ch] = (1 - momentum) * running_mean.data()[ch] + momentum * m;
        running_var.data()[ch] = (1 - momentum) * running_var.data()[ch] + momentum * unbiased;
      }
    } else {
      mu[ch] = running_mean.data()[ch];
      invstd[ch] = T(1) / std::sqrt(running_var.data()[ch] + eps);
    }
  }

  std::vector<T> xhat(x.numel()), out(x.numel());
  for (int i = 0; i < n; ++i)
    for (int ch = 0; ch < c; ++ch)
      for (long p = 0; p < plane; ++p) {
        const long j = idx(i, ch, p);
        xhat[j] = (x.data()[j] - mu[ch]) * invstd[ch];
        out[j] = gamma.data()[ch] * xhat[j] + beta.data()[ch];
      }

  return make_result<T>(
      x.shape(), std::move(out), {x.node(), gamma.node(), beta.node()},
      [n, c, plane, count, batch_stats, idx, xhat = std::move(xhat),
       invstd = std::move(invstd)](Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        if (px.requires_grad) px.ensure_grad();
        if (pg.requires_grad) pg.ensure_grad();
        if (pb.requires_grad) pb.ensure_grad();
        for (int ch = 0; ch < c; ++ch) {
          T sum_dy = 0, sum_dy_xhat = 0;
          for (int i = 0; i < n; ++i)
            for (long p = 0; p < plane; ++p) {
              const long j = idx(i, ch, p);
              sum_dy += self.grad[j];
              sum_dy_xhat += self.grad[j] * xhat[j];
            }
          if (pg.requires_grad) pg.grad[ch] += sum_dy_xhat;
          if (pb.requires_grad) pb.grad[ch] += sum_dy;
          if (!px.requires_grad) continue;
          const T gm = pg.data[ch];
          if (batch_stats) {
            const T m = static_cast<T>(count);
            const T k = gm * invstd[ch] / m;
            for (int i = 0; i < n; ++i)
              for (long p = 0; p < plane; ++p) {
                const long j = idx(i, ch, p);
                px.grad[j] += k * (m * self.grad[j] - sum_dy - xhat[j] * sum_dy_xhat);
              }
          } else {
            for (int i = 0; i < n; ++i)
              for (long p = 0; p < plane; ++p) {
                const long j = idx(i, ch, p);
                px.grad[j] += self.grad[j] * gm * invstd[ch];
              }
          }
        }
      });
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, int k) {
  require_ndim(x, 4, "max_pool2d");
  if (k < 1 || x.dim(2) < k || x.dim(3) < k) throw DimensionError("max_pool2d: bad window");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int oh = h / k, ow = w / k;
  std::vector<T> out(static_cast<std::size_t>(n) * c * oh * ow);
  std::vector<long> arg(out.size());
  for (int i = 0; i < n * c; ++i) {
    const long base = static_cast<long>(i) * h * w;
    for (int y = 0; y < oh; ++y)
      for (int xx = 0; xx < ow; ++xx) {
        long best = base + static_cast<long>(y * k) * w + xx * k;
        for (int dy = 0; dy < k; ++dy)
          for (int dx = 0; dx < k; ++dx) {
            const long j = base + static_cast<long>(y * k + dy) * w + xx * k + dx;
            if (x.data()[j] > x.data()[best]) best = j;
          }
        const long o = (static_cast<long>(i) * oh + y) * ow + xx;
        out[o] = x.data()[best];
        arg[o] = best;
      }
  }
  return make_result<T>({n, c, oh, ow}, std::move(out), {x.node()},
                        [arg = std::move(arg)](Node<T>& self) {
                          auto& p = *self.parents[0];
                          if (!p.requires_grad) return;
                          p.ensure_grad();
                          for (std::size_t o = 0; o < arg.size(); ++o) p.grad[arg[o]] += self.grad[o];
                        });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_ndim(x, 4, "global_avg_pool");
  const int n = x.dim(0), c = x.dim(1);
  const long plane = static_cast<long>(x.dim(2)) * x.dim(3);
  std::vector<T> out(static_cast<std::size_t>(n) * c);
  for (int i = 0; i < n * c; ++i) {
    T acc = 0;
    for (long p = 0; p < plane; ++p) acc += x.data()[i * plane + p];
    out[i] = acc / static_cast<T>(plane);
  }
  return make_result<T>({n, c}, std::move(out), {x.node()}, [plane](Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T g = self.grad[i] / static_cast<T>(plane);
      for (long q = 0; q < plane; ++q) p.grad[i * plane + q] += g;
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_ndim(x, 2, "linear input");
  require_ndim(weight, 2, "linear weight");
  if (weight.dim(1) != x.dim(1))
    throw DimensionError("linear: input has " + std::to_string(x.dim(1)) +
                         " features, weight expects " + std::to_string(weight.dim(1)));
  const int n = x.dim(0), in = x.dim(1), outf = weight.dim(0);
  if (bias.defined() && bias.numel() != static_cast<std::size_t>(outf))
    throw DimensionError("linear: bias length mismatch");
  std::vector<T> out(static_cast<std::size_t>(n) * outf);
  kernels::parallel::linear_forward<T>(n, in, outf, x.data(), weight.data(), out);
  if (bias.defined())
    for (int i = 0; i < n; ++i)
      for (int o = 0; o < outf; ++o) out[static_cast<std::size_t>(i) * outf + o] += bias.data()[o];
  std::vector<std::shared_ptr<Node<T>>> parents{x.node(), weight.node()};
  if (bias.defined()) parents.push_back(bias.node());
  return make_result<T>({n, outf}, std::move(out), std::move(parents),
                        [n, in, outf](Node<T>& self) {
                          auto& px = *self.parents[0];
                          auto& pw = *self.parents[1];
                          if (px.requires_grad) {
                            px.ensure_grad();
                            for (int i = 0; i < n; ++i)
                              for (int o = 0; o < outf; ++o) {
                                const T g = self.grad[static_cast<std::size_t>(i) * outf + o];
                                for (int j = 0; j < in; ++j)
                                  px.grad[static_cast<std::size_t>(i) * in + j] +=
                                      g * pw.data[static_cast<std::size_t>(o) * in + j];
                              }
                          }
                          if (pw.requires_grad) {
                            pw.ensure_grad();
                            for (int i = 0; i < n; ++i)
                              for (int o = 0; o < outf; ++o) {
                                const T g = self.grad[static_cast<std::size_t>(i) * outf + o];
                                for (int j = 0; j < in; ++j)
                                  pw.grad[static_cast<std::size_t>(o) * in + j] +=
                                      g * px.data[static_cast<std::size_t>(i) * in + j];
                              }
                          }
                          if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
                            auto& pb = *self.parents[2];
                            pb.ensure_grad();
                            for (int i = 0; i < n; ++i)
                              for (int o = 0; o < outf; ++o)
                                pb.grad[o] += self.grad[static_cast<std::size_t>(i) * outf + o];
                          }
                        });
}

namespace {
template <typename T>
std::vector<T> softmax_rows(std::span<const T> x, int n, int k) {
  std::vector<T> out(x.size());
  for (int i = 0; i < n; ++i) {
    const T* r = x.data() + static_cast<std::size_t>(i) * k;
    T* o = out.data() + static_cast<std::size_t>(i) * k;
    const T mx = *std::max_element(r, r + k);
    T z = 0;
    for (int j = 0; j < k; ++j) z += (o[j] = std::exp(r[j] - mx));
    for (int j = 0; j < k; ++j) o[j] /= z;
  }
  return out;
}
}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  require_ndim(x, 2, "softmax");
  const int n = x.dim(0), k = x.dim(1);
  return make_result<T>(x.shape(), softmax_rows<T>(x.data(), n, k), {x.node()},
                        [n, k](Node<T>& self) {
                          auto& p = *self.parents[0];
                          if (!p.requires_grad) return;
                          p.ensure_grad();
                          for (int i = 0; i < n; ++i) {
                            const std::size_t b = static_cast<std::size_t>(i) * k;
                            T dot = 0;
                            for (int j = 0; j < k; ++j) dot += self.grad[b + j] * self.data[b + j];
                            for (int j = 0; j < k; ++j)
                              p.grad[b + j] += self.data[b + j] * (self.grad[b + j] - dot);
                          }
                        });
}

template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                        const std::vector<T>& class_weights) {
  require_ndim(logits, 2, "cross_entropy");
  const int n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != static_cast<std::size_t>(n))
    throw DimensionError("cross_entropy: label count does not match batch");
  if (!class_weights.empty() && class_weights.size() != static_cast<std::size_t>(k))
    throw DimensionError("cross_entropy: class weight count does not match classes");
  std::vector<T> prob = softmax_rows<T>(logits.data(), n, k);
  std::vector<T> w(static_cast<std::size_t>(n));
  T wsum = 0, loss = 0;
  for (int i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= k) throw std::out_of_range("cross_entropy: label out of range");
    w[i] = class_weights.empty() ? T(1) : class_weights[y];
    wsum += w[i];
    loss -= w[i] * std::log(std::max(prob[static_cast<std::size_t>(i) * k + y],
                                     std::numeric_limits<T>::min()));
  }
  loss /= wsum;
  return make_result<T>({1}, {loss}, {logits.node()},
                        [n, k, labels, w = std::move(w), wsum, prob = std::move(prob)](Node<T>& self) {
                          auto& p = *self.parents[0];
                          if (!p.requires_grad) return;
                          p.ensure_grad();
                          for (int i = 0; i < n; ++i) {
                            const T g = self.grad[0] * w[i] / wsum;
                            const std::size_t b = static_cast<std::size_t>(i) * k;
                            for (int j = 0; j < k; ++j)
                              p.grad[b + j] += g * (prob[b + j] - (j == labels[i] ? T(1) : T(0)));
                          }
                        });
}

template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& p, T target, T floor, std::size_t* clamp_count) {
  const std::size_t m = p.numel();
  T loss = 0;
  for (T v : p.data()) {
    const T lp = v > floor ? std::log(v) : std::log(floor);
    const T lq = (1 - v) > floor ? std::log(1 - v) : std::log(floor);
    if (clamp_count && ((target > 0 && !(v > floor)) || (target < 1 && !((1 - v) > floor))))
      ++*clamp_count;
    loss -= target * lp + (1 - target) * lq;
  }
  loss /= static_cast<T>(m);
  return make_result<T>({1}, {loss}, {p.node()}, [target, floor, m](Node<T>& self) {
    auto& pp = *self.parents[0];
    if (!pp.requires_grad) return;
    pp.ensure_grad();
    const T g = self.grad[0] / static_cast<T>(m);
    for (std::size_t i = 0; i < m; ++i) {
      const T v = pp.data[i];
      T d = 0;
      if (target != 0 && v > floor) d -= target / v;
      if (target != 1 && (1 - v) > floor) d += (1 - target) / (1 - v);
      pp.grad[i] += g * d;
    }
  });
}

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "l1_loss");
  const std::size_t m = a.numel();
  T acc = 0;
  for (std::size_t i = 0; i < m; ++i) acc += std::abs(a.data()[i] - b.data()[i]);
  return make_result<T>({1}, {acc / static_cast<T>(m)}, {a.node(), b.node()},
                        [m](Node<T>& self) {
                          auto& pa = *self.parents[0];
                          auto& pb = *self.parents[1];
                          if (pa.requires_grad) pa.ensure_grad();
                          if (pb.requires_grad) pb.ensure_grad();
                          const T g = self.grad[0] / static_cast<T>(m);
                          for (std::size_t i = 0; i < m; ++i) {
                            const T d = pa.data[i] - pb.data[i];
                            const T s = d > 0 ? g : (d < 0 ? -g : T(0));
                            if (pa.requires_grad) pa.grad[i] += s;
                            if (pb.requires_grad) pb.grad[i] -= s;
                          }
                        });
}

template <typename T>
Tensor<T> l2_normalize_rows(const Tensor<T>& x, T eps) {
  require_ndim(x, 2, "l2_normalize_rows");
  const int n = x.dim(0), d = x.dim(1);
  std::vector<T> inv(static_cast<std::size_t>(n));
  std::vector<T> out(x.numel());
  for (int i = 0; i < n; ++i) {
    T s = 0;
    for (int j = 0; j < d; ++j) {
      const T v = x.data()[static_cast<std::size_t>(i) * d + j];
      s += v * v;
    }
    inv[i] = T(1) / std::sqrt(s + eps);
    for (int j = 0; j < d; ++j)
      out[static_cast<std::size_t>(i) * d + j] = x.data()[static_cast<std::size_t>(i) * d + j] * inv[i];
  }
  return make_result<T>(x.shape(), std::move(out), {x.node()},
                        [n, d, inv = std::move(inv)](Node<T>& self) {
                          auto& p = *self.parents[0];
                          if (!p.requires_grad) return;
                          p.ensure_grad();
                          for (int i = 0; i < n; ++i) {
                            const std::size_t b = static_cast<std::size_t>(i) * d;
                            T dot = 0;
                            for (int j = 0; j < d; ++j) dot += self.grad[b + j] * self.data[b + j];
                            for (int j = 0; j < d; ++j)
                              p.grad[b + j] += inv[i] * (self.grad[b + j] - self.data[b + j] * dot);
                          }
                        });
}

#define XSPEC_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                 \
  template Tensor<T> scale(const Tensor<T>&, T);                                              \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                         \
  template Tensor<T> sum(const Tensor<T>&);                                                   \
  template Tensor<T> mean(const Tensor<T>&);                                                  \
  template Tensor<T> sum_rows(const Tensor<T>&);                                              \
  template Tensor<T> abs(const Tensor<T>&);                                                   \
  template Tensor<T> square(const Tensor<T>&);                                                \
  template Tensor<T> log_clamped(const Tensor<T>&, T, std::size_t*);                          \
  template Tensor<T> relu(const Tensor<T>&);                                                  \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                         \
  template Tensor<T> tanh(const Tensor<T>&);                                                  \
  template Tensor<T> sigmoid(const Tensor<T>&);                                               \
  template Tensor<T> dropout(const Tensor<T>&, T, Rng&);                                      \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                        \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int);  \
  template Tensor<T> conv_transpose2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,   \
                                      int, int);                                              \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                Tensor<T>&, Tensor<T>&, NormMode, T, T);                      \
  template Tensor<T> max_pool2d(const Tensor<T>&, int);                                       \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                       \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> softmax(const Tensor<T>&);                                               \
  template Tensor<T> cross_entropy(const Tensor<T>&, const std::vector<int>&,                 \
                                   const std::vector<T>&);                                    \
  template Tensor<T> binary_cross_entropy(const Tensor<T>&, T, T, std::size_t*);              \
  template Tensor<T> l1_loss(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> l2_normalize_rows(const Tensor<T>&, T);

XSPEC_INSTANTIATE_OPS(float)
XSPEC_INSTANTIATE_OPS(double)

}  // namespace xspec::nn
