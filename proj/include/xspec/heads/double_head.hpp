#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "xspec/heads/backbone.hpp"

namespace xspec::heads {

struct DoubleHeadConfig {
  int hidden = 64;
  int epochs = 40;
  int batch_size = 64;
  double lr = 1e-4;
  std::uint64_t seed = 7;
};

// Per-feature standardization fitted on training inputs and stored with the
// head.
struct Standardizer {
  nn::Tensor<float> mean;  // [D]
  nn::Tensor<float> inv_std;

  static Standardizer fit(const std::vector<Embedding>& rows, int dim);
  nn::Tensor<float> apply(const nn::Tensor<float>& x) const;  // [N, D]
};

// Two-branch verifier: [e_a, e_b] -> fc -> relu -> fc -> 2-way softmax.
// Class 1 is "genuine".
class DoubleHead {
 public:
  DoubleHead() = default;
  DoubleHead(int dim_a, int dim_b, int hidden, Rng& rng);

  nn::Tensor<float> logits(const nn::Tensor<float>& a, const nn::Tensor<float>& b) const;
  nn::Tensor<float> probabilities(const nn::Tensor<float>& a, const nn::Tensor<float>& b) const;
  // P(genuine), a similarity.
  double score(const Embedding& a, const Embedding& b) const;

  nn::ParamList<float> parameters() const;
  int dim_a() const { return dim_a_; }
  int dim_b() const { return dim_b_; }
  int hidden() const { return hidden_; }
  Standardizer& standardizer_a() { return std_a_; }
  Standardizer& standardizer_b() { return std_b_; }

 private:
  int dim_a_ = 0, dim_b_ = 0, hidden_ = 0;
  Standardizer std_a_, std_b_;
  nn::Linear<float> fc1_, fc2_;
};

struct EmbeddingPair {
  Embedding a;  // routed through branch a
  Embedding b;
  int label = 0;  // 1 genuine, 0 impostor
};

struct HeadLog {
  std::vector<double> loss;  // mean training loss per epoch
};

struct DoubleHeadResult {
  DoubleHead head;
  HeadLog log;
};

// Class-weighted cross-entropy so each label carries half of the loss.
DoubleHeadResult train_double_head(const std::vector<EmbeddingPair>& pairs, const DoubleHeadConfig& config);

struct ImagePair {
  const img::SpectralImage* a;
  const img::SpectralImage* b;
  int label;
};

// Embeds through the frozen branches, then trains the head only.
DoubleHeadResult train_double_head(const EmbeddingModel& model_a, const EmbeddingModel& model_b,
                                   const std::vector<ImagePair>& pairs, const DoubleHeadConfig& config);

void save_double_head(const std::filesystem::path& path, const DoubleHead& head);
DoubleHead load_double_head(const std::filesystem::path& path);

// Rows of equal-length embeddings as a [N, D] tensor.
nn::Tensor<float> embedding_matrix(const std::vector<const Embedding*>& rows);

}  // namespace xspec::heads
