#include <benchmark/benchmark.h>

#include <vector>

#include "xspec/kernels/conv.hpp"
#include "xspec/util/rng.hpp"

using xspec::Rng;
using xspec::kernels::ConvGeometry;

namespace {

// Layer shapes from the 64x64 translator: encoder conv, discriminator
// stride-1 block, and a backbone 3x3 block.
ConvGeometry geometry(int which) {
  switch (which) {
    case 0: return {16, 32, 32, 32, 4, 2, 1};
    case 1: return {64, 8, 8, 128, 4, 1, 1};
    default: return {32, 16, 16, 64, 3, 1, 1};
  }
}

std::vector<float> random_vec(long n, Rng& rng) {
  std::vector<float> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1, 1));
  return v;
}

template <void (*Fn)(const ConvGeometry&, std::span<const float>, std::span<const float>,
                     std::span<float>)>
void BM_Forward(benchmark::State& state) {
  const ConvGeometry g = geometry(static_cast<int>(state.range(0)));
  Rng rng(1);
  const auto in = random_vec(g.in_size(), rng);
  const auto w = random_vec(g.weight_size(), rng);
  std::vector<float> out(static_cast<std::size_t>(g.out_size()));
  for (auto _ : state) {
    Fn(g, in, w, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["MAC/s"] = benchmark::Counter(
      static_cast<double>(g.out_size()) * g.in_channels * g.kernel * g.kernel,
      benchmark::Counter::kIsIterationInvariantRate);
}

template <void (*Fn)(const ConvGeometry&, std::span<const float>, std::span<const float>,
                     std::span<float>)>
void BM_BackwardInput(benchmark::State& state) {
  const ConvGeometry g = geometry(static_cast<int>(state.range(0)));
  Rng rng(2);
  const auto dout = random_vec(g.out_size(), rng);
  const auto w = random_vec(g.weight_size(), rng);
  std::vector<float> din(static_cast<std::size_t>(g.in_size()));
  for (auto _ : state) {
    Fn(g, dout, w, din);
    benchmark::DoNotOptimize(din.data());
  }
}

template <void (*Fn)(const ConvGeometry&, std::span<const float>, std::span<const float>,
                     std::span<float>)>
void BM_BackwardWeight(benchmark::State& state) {
  const ConvGeometry g = geometry(static_cast<int>(state.range(0)));
  Rng rng(3);
  const auto in = random_vec(g.in_size(), rng);
  const auto dout = random_vec(g.out_size(), rng);
  std::vector<float> dw(static_cast<std::size_t>(g.weight_size()));
  for (auto _ : state) {
    Fn(g, in, dout, dw);
    benchmark::DoNotOptimize(dw.data());
  }
}

}  // namespace

namespace sk = xspec::kernels::serial;
namespace pk = xspec::kernels::parallel;

BENCHMARK(BM_Forward<sk::conv2d_forward<float>>)->DenseRange(0, 2);
BENCHMARK(BM_Forward<pk::conv2d_forward<float>>)->DenseRange(0, 2);
BENCHMARK(BM_BackwardInput<sk::conv2d_backward_input<float>>)->DenseRange(0, 2);
BENCHMARK(BM_BackwardInput<pk::conv2d_backward_input<float>>)->DenseRange(0, 2);
BENCHMARK(BM_BackwardWeight<sk::conv2d_backward_weight<float>>)->DenseRange(0, 2);
BENCHMARK(BM_BackwardWeight<pk::conv2d_backward_weight<float>>)->DenseRange(0, 2);

BENCHMARK_MAIN();
