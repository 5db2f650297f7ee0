#include "xspec/nn/adam.hpp"

#include <cmath>

namespace xspec::nn {

template <typename T>
void adam_step(const std::vector<Tensor<T>>& params, AdamState<T>& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), T(0));
      state.v.emplace_back(p.numel(), T(0));
    }
  }
  if (state.m.size() != params.size())
    throw DimensionError("adam_step: parameter list changed between steps");
  ++state.step;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  const T step_size = static_cast<T>(c.lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(c.eps);

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T> p = params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != p.numel()) throw DimensionError("adam_step: moment buffer shape mismatch");
    const bool has = p.has_grad();
    auto data = p.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const T g = has ? p.grad()[i] : T(0);
      m[i] = b1 * m[i] + (1 - b1) * g;
      v[i] = b2 * v[i] + (1 - b2) * g * g;
      data[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_bc2 + eps);
    }
  }
}

template void adam_step(const std::vector<Tensor<float>>&, AdamState<float>&);
template void adam_step(const std::vector<Tensor<double>>&, AdamState<double>&);

}  // namespace xspec::nn
