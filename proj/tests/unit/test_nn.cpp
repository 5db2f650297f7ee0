#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "support/gradcheck.hpp"
#include "xspec/kernels/conv.hpp"
#include "xspec/nn/adam.hpp"
#include "xspec/nn/checkpoint.hpp"
#include "xspec/nn/layers.hpp"
#include "xspec/nn/ops.hpp"
#include "xspec/util/files.hpp"

using namespace xspec;
using namespace xspec::nn;
using xspec::testing::gradcheck;
using xspec::testing::random_projection;
using xspec::testing::random_tensor;
using xspec::testing::random_tensor_away_from_zero;

namespace {

constexpr double kGradTol = 1e-4;
constexpr int kSeeds = 5;

double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

}  // namespace

TEST_CASE("conv2d output shapes") {
  Rng rng(1);
  Tensor<double> w = random_tensor({5, 1, 4, 4}, rng);
  Tensor<double> x = random_tensor({1, 1, 6, 6}, rng);
  auto y = conv2d(x, w, Tensor<double>(), 2, 1);
  CHECK(y.shape() == Shape{1, 5, 3, 3});

  Tensor<float> big({1, 3, 256, 256}, 0.5f);
  Rng r2(2);
  Tensor<float> wb = gaussian_tensor<float>({2, 3, 4, 4}, 0.02, r2);
  auto yb = conv2d(big, wb, Tensor<float>(), 2, 1);
  CHECK(yb.dim(2) == 128);
  CHECK(yb.dim(3) == 128);

  // Cross-check the 256x256 result against the nested-loop reference.
  kernels::ConvGeometry g{3, 256, 256, 2, 4, 2, 1};
  std::vector<float> ref(static_cast<std::size_t>(g.out_size()));
  kernels::serial::conv2d_forward<float>(g, big.data(), wb.data(), ref);
  double maxdiff = 0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    maxdiff = std::max(maxdiff, static_cast<double>(std::abs(ref[i] - yb.data()[i])));
  CHECK(maxdiff < 1e-5);
}

TEST_CASE("conv2d with a unit 1x1 kernel is the identity") {
  Rng rng(3);
  auto x = random_tensor({1, 1, 5, 7}, rng);
  Tensor<double> w({1, 1, 1, 1}, 1.0);
  auto y = conv2d(x, w, Tensor<double>(), 1, 0);
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);
}

TEST_CASE("conv2d rejects channel mismatch and oversized kernels") {
  Tensor<double> x({1, 2, 6, 6});
  Tensor<double> w({4, 3, 3, 3});
  CHECK_THROWS_AS(conv2d(x, w, Tensor<double>(), 1, 0), DimensionError);
  Tensor<double> w2({4, 2, 9, 9});
  CHECK_THROWS_AS(conv2d(x, w2, Tensor<double>(), 1, 1), std::invalid_argument);
  Tensor<double> w3({4, 2, 3, 3});
  CHECK_THROWS_AS(conv2d(x, w3, Tensor<double>(), 0, 1), std::invalid_argument);
}

TEST_CASE("conv_transpose2d output shapes") {
  Rng rng(4);
  auto x = random_tensor({1, 1, 3, 3}, rng);
  auto w = random_tensor({1, 2, 4, 4}, rng);
  CHECK(conv_transpose2d(x, w, Tensor<double>(), 2, 1).shape() == Shape{1, 2, 6, 6});

  Tensor<float> img({1, 2, 128, 128}, 0.1f);
  Tensor<float> wd({4, 2, 4, 4}, 0.01f);
  Tensor<float> wu({4, 2, 4, 4}, 0.01f);
  auto down = conv2d(img, wd, Tensor<float>(), 2, 1);
  CHECK(down.dim(2) == 64);
  auto up = conv_transpose2d(down, wu, Tensor<float>(), 2, 1);
  CHECK(up.shape() == img.shape());
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(100 + seed);
    const int c = 1 + static_cast<int>(rng.below(3)), co = 1 + static_cast<int>(rng.below(3));
    const int k = 1 + static_cast<int>(rng.below(4)), s = 1 + static_cast<int>(rng.below(2));
    const int pad = static_cast<int>(rng.below(2));
    int h = k - 2 * pad + s * static_cast<int>(1 + rng.below(4));
    while (h < 1) h += s;
    auto x = random_tensor({2, c, h, h}, rng, -1, 1, false);
    auto w = random_tensor({co, c, k, k}, rng, -1, 1, false);
    auto cx = conv2d(x, w, Tensor<double>(), s, pad);
    auto y = random_tensor(cx.shape(), rng, -1, 1, false);
    auto ty = conv_transpose2d(y, w, Tensor<double>(), s, pad);
    REQUIRE(ty.shape() == x.shape());
    CHECK(std::abs(dot(cx, y) - dot(x, ty)) < 1e-10);
  }
}

TEST_CASE("shape formula matches the reference convolution for random geometries") {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(5));
    const int s = 1 + static_cast<int>(rng.below(3));
    const int pad = static_cast<int>(rng.below(3));
    const int h = std::max(1, k - 2 * pad) + static_cast<int>(rng.below(9));
    const int w = std::max(1, k - 2 * pad) + static_cast<int>(rng.below(9));
    if (h + 2 * pad < k || w + 2 * pad < k) continue;
    const int ci = 1 + static_cast<int>(rng.below(3)), co = 1 + static_cast<int>(rng.below(5));
    kernels::ConvGeometry g{ci, h, w, co, k, s, pad};
    CHECK(g.out_h() == (h + 2 * pad - k) / s + 1);
    auto x = random_tensor({1, ci, h, w}, rng, -1, 1, false);
    auto wt = random_tensor({co, ci, k, k}, rng, -1, 1, false);
    auto y = conv2d(x, wt, Tensor<double>(), s, pad);
    REQUIRE(y.shape() == Shape{1, co, g.out_h(), g.out_w()});
    std::vector<double> ref(static_cast<std::size_t>(g.out_size()));
    kernels::serial::conv2d_forward<double>(g, x.data(), wt.data(), ref);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(ref[i] - y.data()[i]) < 1e-12);
  }
}

TEST_CASE("batch_norm examples") {
  SUBCASE("constant channel normalizes to zero") {
    BatchNorm<double> bn(2);
    Tensor<double> x({1, 2, 3, 3}, 4.0);
    auto y = bn(x, NormMode::kTrain);
    for (double v : y.data()) CHECK(v == doctest::Approx(0.0));
  }
  SUBCASE("standardized input passes through") {
    BatchNorm<double> bn(1);
    bn.eps = 1e-12;
    std::vector<double> v{-1, 1, -1, 1, -1, 1, -1, 1};
    Tensor<double> x({1, 1, 2, 4}, v);
    auto y = bn(x, NormMode::kTrain);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(y.data()[i] == doctest::Approx(v[i]).epsilon(1e-9));
  }
  SUBCASE("running statistics are used in inference mode") {
    BatchNorm<double> bn(1);
    bn.running_mean.data()[0] = 2.0;
    bn.running_var.data()[0] = 4.0;
    bn.eps = 0;
    Tensor<double> x({1, 1, 1, 2}, std::vector<double>{2.0, 6.0});
    auto y = bn(x, NormMode::kRunning);
    CHECK(y.data()[0] == doctest::Approx(0.0));
    CHECK(y.data()[1] == doctest::Approx(2.0));
  }
  SUBCASE("training mode updates running statistics") {
    BatchNorm<double> bn(1);
    Tensor<double> x({1, 1, 1, 2}, std::vector<double>{0.0, 2.0});
    bn(x, NormMode::kTrain);
    CHECK(bn.running_mean.data()[0] == doctest::Approx(0.1));
    CHECK(bn.running_var.data()[0] == doctest::Approx(0.9 + 0.1 * 2.0));
    bn(x, NormMode::kBatchStats);
    CHECK(bn.running_mean.data()[0] == doctest::Approx(0.1));
  }
  SUBCASE("channel mismatch is rejected") {
    BatchNorm<double> bn(3);
    Tensor<double> x({1, 2, 2, 2});
    CHECK_THROWS_AS(bn(x, NormMode::kTrain), DimensionError);
  }
}

TEST_CASE("activation examples") {
  Tensor<double> z({3}, std::vector<double>{0.0, -1.0, 2.0});
  CHECK(nn::tanh(z).data()[0] == 0.0);
  CHECK(sigmoid(z).data()[0] == 0.5);
  auto lr = leaky_relu(z, 0.2);
  CHECK(lr.data()[1] == doctest::Approx(-0.2));
  CHECK(lr.data()[2] == 2.0);
  CHECK(relu(z).data()[1] == 0.0);
  Rng rng(1);
  auto d = dropout(z, 0.0, rng);
  for (std::size_t i = 0; i < 3; ++i) CHECK(d.data()[i] == z.data()[i]);
  CHECK_THROWS(dropout(z, 1.0, rng));
}

TEST_CASE("dropout scales survivors by 1/(1-p)") {
  Rng rng(5);
  Tensor<double> x({1000}, 1.0);
  auto y = dropout(x, 0.5, rng);
  int kept = 0;
  for (double v : y.data()) {
    CHECK((v == 0.0 || v == 2.0));
    kept += v != 0.0;
  }
  CHECK(kept > 400);
  CHECK(kept < 600);
}

TEST_CASE("backward examples") {
  Rng rng(9);
  auto x = random_tensor({2, 3}, rng);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);

  x.zero_grad();
  backward(scale(sum(mul(x, x)), 0.5));
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(x.grad()[i] == doctest::Approx(x.data()[i]));

  SUBCASE("non-scalar loss is rejected") { CHECK_THROWS_AS(backward(x), DimensionError); }

  SUBCASE("repeated backward accumulates into leaves") {
    x.zero_grad();
    auto loss = sum(scale(x, 3.0));
    backward(loss);
    backward(loss);
    for (double g : x.grad()) CHECK(g == 6.0);
  }
}

TEST_CASE("no-grad guard suppresses graph construction") {
  Rng rng(2);
  auto x = random_tensor({4}, rng);
  NoGradGuard guard;
  auto y = scale(x, 2.0);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("gradient checks for every differentiable op") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    CAPTURE(seed);
    Rng rng(1000 + seed);
    const std::uint64_t ps = 77 + seed;

    auto a = random_tensor({2, 3, 4, 4}, rng);
    auto b = random_tensor({2, 3, 4, 4}, rng);
    CHECK(gradcheck({a, b}, [&] { return random_projection(add(a, b), ps); }) < kGradTol);
    CHECK(gradcheck({a, b}, [&] { return random_projection(sub(a, b), ps); }) < kGradTol);
    CHECK(gradcheck({a, b}, [&] { return random_projection(mul(a, b), ps); }) < kGradTol);
    CHECK(gradcheck({a}, [&] { return random_projection(square(a), ps); }) < kGradTol);
    CHECK(gradcheck({a}, [&] { return mean(scale(add_scalar(a, 0.3), 1.7)); }) < kGradTol);

    auto k = random_tensor_away_from_zero({2, 3, 4, 4}, rng);
    CHECK(gradcheck({k}, [&] { return random_projection(relu(k), ps); }) < kGradTol);
    CHECK(gradcheck({k}, [&] { return random_projection(leaky_relu(k, 0.2), ps); }) < kGradTol);
    CHECK(gradcheck({k}, [&] { return random_projection(nn::abs(k), ps); }) < kGradTol);
    CHECK(gradcheck({a}, [&] { return random_projection(nn::tanh(a), ps); }) < kGradTol);
    CHECK(gradcheck({a}, [&] { return random_projection(sigmoid(a), ps); }) < kGradTol);
    CHECK(gradcheck({a}, [&] {
            Rng drop(ps);
            return random_projection(dropout(a, 0.3, drop), ps);
          }) < kGradTol);

    auto pos = random_tensor({3, 5}, rng, 0.1, 2.0);
    CHECK(gradcheck({pos}, [&] { return random_projection(log_clamped(pos), ps); }) < kGradTol);
    CHECK(gradcheck({pos}, [&] { return random_projection(sum_rows(pos), ps); }) < kGradTol);

    // Convolutions with bias, stride 2 and padding.
    auto x = random_tensor({2, 2, 6, 6}, rng);
    auto w = random_tensor({3, 2, 4, 4}, rng, -0.5, 0.5);
    auto bias = random_tensor({3}, rng);
    CHECK(gradcheck({x, w, bias}, [&] { return random_projection(conv2d(x, w, bias, 2, 1), ps); }) <
          kGradTol);
    auto xt = random_tensor({2, 3, 3, 3}, rng);
    auto wt = random_tensor({3, 2, 4, 4}, rng, -0.5, 0.5);
    auto bt = random_tensor({2}, rng);
    CHECK(gradcheck({xt, wt, bt},
                    [&] { return random_projection(conv_transpose2d(xt, wt, bt, 2, 1), ps); }) <
          kGradTol);

    BatchNorm<double> bn(3);
    auto gamma = random_tensor({3}, rng, 0.5, 1.5);
    auto beta = random_tensor({3}, rng);
    bn.gamma = gamma;
    bn.beta = beta;
    CHECK(gradcheck({a, gamma, beta},
                    [&] { return random_projection(bn(a, NormMode::kTrain), ps); }) < kGradTol);
    bn.running_var.data()[1] = 2.0;
    CHECK(gradcheck({a, gamma, beta},
                    [&] { return random_projection(bn(a, NormMode::kRunning), ps); }) < kGradTol);

    CHECK(gradcheck({a}, [&] { return random_projection(max_pool2d(a, 2), ps); }) < kGradTol);
    CHECK(gradcheck({a}, [&] { return random_projection(global_avg_pool(a), ps); }) < kGradTol);
    CHECK(gradcheck({a, b}, [&] { return random_projection(concat_channels(a, b), ps); }) < kGradTol);
    CHECK(gradcheck({a}, [&] { return random_projection(reshape(a, {6, 16}), ps); }) < kGradTol);

    auto m = random_tensor({4, 6}, rng);
    auto lw = random_tensor({3, 6}, rng);
    auto lb = random_tensor({3}, rng);
    CHECK(gradcheck({m, lw, lb}, [&] { return random_projection(linear(m, lw, lb), ps); }) < kGradTol);
    CHECK(gradcheck({m}, [&] { return random_projection(softmax(m), ps); }) < kGradTol);
    CHECK(gradcheck({m}, [&] { return random_projection(l2_normalize_rows(m), ps); }) < kGradTol);
    CHECK(gradcheck({m}, [&] { return cross_entropy(m, {0, 5, 2, 2}, {1.0, 0.5, 2.0, 1, 1, 1}); }) <
          kGradTol);

    auto prob = random_tensor({2, 1, 3, 3}, rng, 0.05, 0.95);
    CHECK(gradcheck({prob}, [&] { return binary_cross_entropy(prob, 1.0); }) < kGradTol);
    CHECK(gradcheck({prob}, [&] { return binary_cross_entropy(prob, 0.0); }) < kGradTol);
    auto c = random_tensor({2, 3, 4, 4}, rng);
    CHECK(gradcheck({a, c}, [&] { return l1_loss(a, c); }) < kGradTol);
  }
}

TEST_CASE("forward and backward are bitwise deterministic") {
  auto run = [] {
    Rng rng(42);
    Conv2d<float> conv(2, 4, 4, 2, 1, true, rng);
    BatchNorm<float> bn(4);
    Tensor<float> x({1, 2, 16, 16});
    for (auto& v : x.data()) v = static_cast<float>(rng.uniform(-1, 1));
    auto y = leaky_relu(bn(conv(x), NormMode::kTrain), 0.2f);
    backward(mean(square(y)));
    std::vector<float> out(conv.weight.grad().begin(), conv.weight.grad().end());
    out.insert(out.end(), y.data().begin(), y.data().end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("adam step examples") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Tensor<double> p({3}, std::vector<double>{1, 2, 3}, true);
    p.zero_grad();
    AdamState<double> st(AdamConfig{0.001});
    adam_step<double>({p}, st);
    CHECK(p.data()[0] == 1.0);
    CHECK(p.data()[2] == 3.0);
    CHECK(st.step == 1);
  }
  SUBCASE("first step moves by lr * sign(g)") {
    Tensor<double> p({2}, std::vector<double>{0.0, 0.0}, true);
    p.zero_grad();
    p.grad()[0] = 3.7;
    p.grad()[1] = -0.02;
    AdamState<double> st(AdamConfig{0.001});
    adam_step<double>({p}, st);
    // m_hat = g, v_hat = g^2  =>  delta = lr * g / (|g| + eps)
    CHECK(p.data()[0] == doctest::Approx(-0.001 * 3.7 / (3.7 + 1e-8)).epsilon(1e-12));
    CHECK(p.data()[1] == doctest::Approx(0.001 * 0.02 / (0.02 + 1e-8)).epsilon(1e-12));
  }
  SUBCASE("minimizes a scalar quadratic") {
    Tensor<double> w({1}, 0.0, true);
    AdamState<double> st(AdamConfig{0.1});
    for (int i = 0; i < 200; ++i) {
      w.zero_grad();
      backward(square(add_scalar(w, -3.0)));
      adam_step<double>({w}, st);
    }
    CHECK(std::abs(w.data()[0] - 3.0) < 1e-2);
    CHECK(st.step == 200);
  }
}

TEST_CASE("checkpoint container round-trips and validates the manifest") {
  Rng rng(11);
  Conv2d<float> conv(2, 3, 4, 2, 1, true, rng);
  BatchNorm<float> bn(3, &rng);
  ParamList<float> pl;
  pl.append("conv.", conv.parameters());
  pl.append("bn.", bn.parameters());
  const std::string bytes = encode_checkpoint(pl.all());
  CHECK(bytes.substr(0, 4) == "XSPT");

  auto manifest = read_manifest(bytes);
  REQUIRE(manifest.size() == 6);
  CHECK(manifest[0].name == "conv.weight");
  CHECK(manifest[0].shape == Shape{3, 2, 4, 4});
  CHECK(manifest[5].name == "bn.running_var");

  Rng other(12);
  Conv2d<float> conv2(2, 3, 4, 2, 1, true, other);
  BatchNorm<float> bn2(3, &other);
  ParamList<float> pl2;
  pl2.append("conv.", conv2.parameters());
  pl2.append("bn.", bn2.parameters());
  decode_checkpoint(bytes, pl2.all());
  for (std::size_t i = 0; i < conv.weight.numel(); ++i)
    CHECK(conv2.weight.data()[i] == conv.weight.data()[i]);

  ParamList<float> wrong;
  wrong.append("conv.", Conv2d<float>(2, 4, 4, 2, 1, true, other).parameters());
  CHECK_THROWS(decode_checkpoint(bytes, wrong.all()));
  CHECK_THROWS(decode_checkpoint(bytes.substr(0, bytes.size() - 1), pl2.all()));

  const auto path = std::filesystem::temp_directory_path() / "xspec_ckpt_test.bin";
  save_checkpoint(path, pl);
  load_checkpoint(path, pl2);
  CHECK(read_file(path) == bytes);
  std::filesystem::remove(path);
}
