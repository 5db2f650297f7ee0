#pragma once

#include <cstddef>
#include <vector>

#include "xspec/nn/tensor.hpp"
#include "xspec/util/rng.hpp"

namespace xspec::nn {

// Elementwise arithmetic; operands must have identical shapes.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T s);

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
// [N, D] -> [N]
template <typename T> Tensor<T> sum_rows(const Tensor<T>& a);

template <typename T> Tensor<T> abs(const Tensor<T>& a);
template <typename T> Tensor<T> square(const Tensor<T>& a);

// log(max(a, floor)); the gradient is zero on the clamped branch. Each
// clamped element increments *clamp_count when provided.
template <typename T>
Tensor<T> log_clamped(const Tensor<T>& a, T floor = T(1e-12), std::size_t* clamp_count = nullptr);

template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> leaky_relu(const Tensor<T>& a, T slope);
template <typename T> Tensor<T> tanh(const Tensor<T>& a);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);

// Inverted dropout: keeps each element with probability 1-p and scales it by
// 1/(1-p). p = 0 is the identity.
template <typename T> Tensor<T> dropout(const Tensor<T>& a, T p, Rng& rng);

template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);

// [N,C1,H,W] ++ [N,C2,H,W] -> [N,C1+C2,H,W]; also [N,D1] ++ [N,D2].
template <typename T> Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

// x [N,C,H,W], weight [C',C,k,k], bias [C'] or undefined.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int pad);

// x [N,C,H,W], weight [C,C',k,k], bias [C'] or undefined.
// H' = (H-1)*stride - 2*pad + k.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                           int stride, int pad);

enum class NormMode {
  kTrain,       // batch statistics, running statistics updated
  kBatchStats,  // batch statistics, running statistics untouched
  kRunning,     // running statistics
};

// Per-channel normalization of x [N,C,H,W] or [N,C]. running_mean and
// running_var are updated in place in kTrain mode.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, NormMode mode, T momentum,
                     T eps);

// Non-overlapping max pooling with window = stride = k.
template <typename T> Tensor<T> max_pool2d(const Tensor<T>& x, int k);
// [N,C,H,W] -> [N,C]
template <typename T> Tensor<T> global_avg_pool(const Tensor<T>& x);

// x [N,in], weight [out,in], bias [out] or undefined -> [N,out]
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// Row-wise over [N,K].
template <typename T> Tensor<T> softmax(const Tensor<T>& x);

// Weighted mean of -log softmax(logits)[label]; class_weights empty means
// uniform.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                        const std::vector<T>& class_weights = {});

// mean(-(t log p + (1-t) log(1-p))) with logs clamped at floor.
template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& p, T target, T floor = T(1e-12),
                               std::size_t* clamp_count = nullptr);

// mean(|a - b|); subgradient 0 where a == b.
template <typename T> Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b);

// Row-wise x / sqrt(|x|^2 + eps) over [N,D].
template <typename T> Tensor<T> l2_normalize_rows(const Tensor<T>& x, T eps = T(1e-12));

}  // namespace xspec::nn
