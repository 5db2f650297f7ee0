#pragma once

// Central finite-difference gradient oracle, independent of the reverse-mode
// sweep: only forward evaluations of the loss are used.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "xspec/nn/ops.hpp"
#include "xspec/nn/tensor.hpp"
#include "xspec/util/rng.hpp"

namespace xspec::testing {

using nn::Tensor;

inline Tensor<double> random_tensor(nn::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0,
                                    bool requires_grad = true) {
  Tensor<double> t(std::move(shape), 0.0, requires_grad);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero, for ops with a kink at the origin.
inline Tensor<double> random_tensor_away_from_zero(nn::Shape shape, Rng& rng, double margin = 0.05) {
  Tensor<double> t(std::move(shape), 0.0, true);
  for (auto& v : t.data()) {
    double u = rng.uniform(margin, 1.0);
    v = rng.uniform() < 0.5 ? -u : u;
  }
  return t;
}

// Returns ||analytic - numeric|| / max(||analytic||, ||numeric||) over all
// inputs. loss_fn must be a pure function of the input values.
inline double gradcheck(const std::vector<Tensor<double>>& inputs,
                        const std::function<Tensor<double>()>& loss_fn, double h = 1e-6) {
  for (auto in : inputs) in.zero_grad();
  Tensor<double> loss = loss_fn();
  nn::backward(loss);

  double diff2 = 0, a2 = 0, n2 = 0;
  for (auto in : inputs) {
    std::vector<double> analytic(in.grad().begin(), in.grad().end());
    for (std::size_t i = 0; i < in.numel(); ++i) {
      const double orig = in.data()[i];
      in.data()[i] = orig + h;
      const double up = loss_fn().item();
      in.data()[i] = orig - h;
      const double down = loss_fn().item();
      in.data()[i] = orig;
      const double numeric = (up - down) / (2 * h);
      diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
    }
  }
  const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
  return std::sqrt(diff2) / denom;
}

// Weighted sum with fixed random coefficients turns any tensor into a scalar
// whose gradient exercises every output element.
inline Tensor<double> random_projection(const Tensor<double>& y, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> w(y.shape(), 0.0, false);
  for (auto& v : w.data()) v = rng.uniform(-1.0, 1.0);
  return nn::sum(nn::mul(y, w));
}

}  // namespace xspec::testing
