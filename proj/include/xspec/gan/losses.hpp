#pragma once

#include <cstddef>

#include "xspec/gan/discriminator.hpp"

namespace xspec::gan {

inline constexpr double kLogFloor = 1e-12;

// mean(-log D(x, y_real)) + mean(-log(1 - D(x, y_fake))) over the patch maps.
// Clamped logs increment *clamp_count when given.
template <typename T>
nn::Tensor<T> discriminator_loss(const nn::Tensor<T>& real_map, const nn::Tensor<T>& fake_map,
                                 std::size_t* clamp_count = nullptr);

template <typename T>
nn::Tensor<T> discriminator_loss(const Discriminator<T>& d, const nn::Tensor<T>& x,
                                 const nn::Tensor<T>& y_real, const nn::Tensor<T>& y_fake,
                                 nn::NormMode mode = nn::NormMode::kTrain,
                                 std::size_t* clamp_count = nullptr);

template <typename T>
struct GeneratorLoss {
  nn::Tensor<T> total;        // adversarial + lambda * l1
  nn::Tensor<T> adversarial;  // mean(-log D(x, y_fake))
  nn::Tensor<T> l1;           // mean |y_target - y_fake|, unweighted
};

template <typename T>
GeneratorLoss<T> generator_loss(const nn::Tensor<T>& fake_map, const nn::Tensor<T>& y_target,
                                const nn::Tensor<T>& y_fake, double lambda_l1,
                                std::size_t* clamp_count = nullptr);

template <typename T>
GeneratorLoss<T> generator_loss(const Discriminator<T>& d, const nn::Tensor<T>& x,
                                const nn::Tensor<T>& y_target, const nn::Tensor<T>& y_fake,
                                double lambda_l1, nn::NormMode mode = nn::NormMode::kBatchStats,
                                std::size_t* clamp_count = nullptr);

}  // namespace xspec::gan
