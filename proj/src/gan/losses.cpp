#include "xspec/gan/losses.hpp"

namespace xspec::gan {

using nn::Tensor;

template <typename T>
Tensor<T> discriminator_loss(const Tensor<T>& real_map, const Tensor<T>& fake_map,
                             std::size_t* clamp_count) {
  return nn::add(nn::binary_cross_entropy(real_map, T(1), T(kLogFloor), clamp_count),
                 nn::binary_cross_entropy(fake_map, T(0), T(kLogFloor), clamp_count));
}

template <typename T>
Tensor<T> discriminator_loss(const Discriminator<T>& d, const Tensor<T>& x, const Tensor<T>& y_real,
                             const Tensor<T>& y_fake, nn::NormMode mode, std::size_t* clamp_count) {
  return discriminator_loss(d.forward(x, y_real, mode), d.forward(x, y_fake, mode), clamp_count);
}

template <typename T>
GeneratorLoss<T> generator_loss(const Tensor<T>& fake_map, const Tensor<T>& y_target,
                                const Tensor<T>& y_fake, double lambda_l1, std::size_t* clamp_count) {
  GeneratorLoss<T> out;
  out.adversarial = nn::binary_cross_entropy(fake_map, T(1), T(kLogFloor), clamp_count);
  out.l1 = nn::l1_loss(y_fake, y_target);
  out.total = lambda_l1 == 0 ? out.adversarial
                             : nn::add(out.adversarial, nn::scale(out.l1, static_cast<T>(lambda_l1)));
  return out;
}

template <typename T>
GeneratorLoss<T> generator_loss(const Discriminator<T>& d, const Tensor<T>& x, const Tensor<T>& y_target,
                                const Tensor<T>& y_fake, double lambda_l1, nn::NormMode mode,
                                std::size_t* clamp_count) {
  return generator_loss(d.forward(x, y_fake, mode), y_target, y_fake, lambda_l1, clamp_count);
}

#define XSPEC_INSTANTIATE(T)                                                                         \
  template Tensor<T> discriminator_loss(const Tensor<T>&, const Tensor<T>&, std::size_t*);          \
  template Tensor<T> discriminator_loss(const Discriminator<T>&, const Tensor<T>&, const Tensor<T>&, \
                                        const Tensor<T>&, nn::NormMode, std::size_t*);              \
  template GeneratorLoss<T> generator_loss(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                           double, std::size_t*);                                   \
  template GeneratorLoss<T> generator_loss(const Discriminator<T>&, const Tensor<T>&,               \
                                           const Tensor<T>&, const Tensor<T>&, double,              \
                                           nn::NormMode, std::size_t*);
XSPEC_INSTANTIATE(float)
XSPEC_INSTANTIATE(double)
#undef XSPEC_INSTANTIATE

}  // namespace xspec::gan
