#include "doctest.h"

#include <omp.h>

#include <cmath>
#include <vector>

#include "xspec/kernels/conv.hpp"
#include "xspec/util/rng.hpp"

using namespace xspec;
using kernels::ConvGeometry;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, Rng& rng) {
  std::vector<T> v(n);
  for (auto& x : v) x = static_cast<T>(rng.uniform(-1, 1));
  return v;
}

ConvGeometry random_geometry(Rng& rng) {
  for (;;) {
    ConvGeometry g;
    g.in_channels = 1 + static_cast<int>(rng.below(5));
    g.out_channels = 1 + static_cast<int>(rng.below(9));
    g.kernel = 1 + static_cast<int>(rng.below(5));
    g.stride = 1 + static_cast<int>(rng.below(3));
    g.pad = static_cast<int>(rng.below(3));
    g.in_h = 1 + static_cast<int>(rng.below(14));
    g.in_w = 1 + static_cast<int>(rng.below(14));
    if (g.in_h + 2 * g.pad >= g.kernel && g.in_w + 2 * g.pad >= g.kernel) return g;
  }
}

template <typename T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

}  // namespace

TEST_CASE_TEMPLATE("parallel conv kernels agree with the serial reference", T, float, double) {
  const double tol = sizeof(T) == 4 ? 1e-4 : 1e-12;
  Rng rng(sizeof(T));
  for (int trial = 0; trial < 50; ++trial) {
    const ConvGeometry g = random_geometry(rng);
    CAPTURE(g.in_channels);
    CAPTURE(g.kernel);
    CAPTURE(g.stride);
    const auto in = random_vec<T>(g.in_size(), rng);
    const auto w = random_vec<T>(g.weight_size(), rng);
    const auto dout = random_vec<T>(g.out_size(), rng);

    std::vector<T> ref(g.out_size()), par(g.out_size());
    kernels::serial::conv2d_forward<T>(g, in, w, ref);
    kernels::parallel::conv2d_forward<T>(g, in, w, par);
    CHECK(max_abs_diff(ref, par) < tol);

    std::vector<T> din_ref(g.in_size(), T(0.5)), din_par(g.in_size(), T(0.5));
    kernels::serial::conv2d_backward_input<T>(g, dout, w, din_ref);
    kernels::parallel::conv2d_backward_input<T>(g, dout, w, din_par);
    CHECK(max_abs_diff(din_ref, din_par) < tol);

    std::vector<T> dw_ref(g.weight_size(), T(-0.25)), dw_par(g.weight_size(), T(-0.25));
    kernels::serial::conv2d_backward_weight<T>(g, in, dout, dw_ref);
    kernels::parallel::conv2d_backward_weight<T>(g, in, dout, dw_par);
    CHECK(max_abs_diff(dw_ref, dw_par) < tol);
  }
}

TEST_CASE("parallel linear kernel agrees with the serial reference") {
  Rng rng(3);
  const int n = 5, in = 37, out = 11;
  const auto x = random_vec<double>(n * in, rng);
  const auto w = random_vec<double>(out * in, rng);
  std::vector<double> a(n * out), b(n * out);
  kernels::serial::linear_forward<double>(n, in, out, x, w, a);
  kernels::parallel::linear_forward<double>(n, in, out, x, w, b);
  CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("parallel kernels give identical bits for any thread count") {
  Rng rng(17);
  ConvGeometry g{6, 20, 20, 10, 4, 2, 1};
  const auto in = random_vec<float>(g.in_size(), rng);
  const auto w = random_vec<float>(g.weight_size(), rng);
  const auto dout = random_vec<float>(g.out_size(), rng);
  auto run = [&](int threads) {
    const int prev = omp_get_max_threads();
    omp_set_num_threads(threads);
    std::vector<float> out(g.out_size()), din(g.in_size(), 0.f), dw(g.weight_size(), 0.f);
    kernels::parallel::conv2d_forward<float>(g, in, w, out);
    kernels::parallel::conv2d_backward_input<float>(g, dout, w, din);
    kernels::parallel::conv2d_backward_weight<float>(g, in, dout, dw);
    omp_set_num_threads(prev);
    out.insert(out.end(), din.begin(), din.end());
    out.insert(out.end(), dw.begin(), dw.end());
    return out;
  };
  CHECK(run(1) == run(3));
}

TEST_CASE("geometry validation") {
  ConvGeometry g{1, 3, 3, 1, 5, 1, 0};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g.pad = 1;
  CHECK_NOTHROW(g.validate());
  g.stride = 0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
