#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "xspec/heads/double_head.hpp"

namespace xspec::heads {

struct TripletConfig {
  double alpha = 0.2;    // inter-class margin
  double margin = 0.1;   // intra-class bound m
  double beta = 0.02;    // weight of the intra-class term
  int hidden = 64;
  int out = 32;
  int epochs = 60;
  int classes_per_batch = 8;
  int per_class = 4;
  double lr = 1e-4;
  std::uint64_t seed = 7;
};

// mean_i max(0, |a-p|^2 - |a-n|^2 + alpha) + beta max(0, |a-p|^2 - m) over
// rows of [N, D] inputs.
template <typename T>
nn::Tensor<T> improved_triplet_loss(const nn::Tensor<T>& anchor, const nn::Tensor<T>& positive,
                                    const nn::Tensor<T>& negative, double alpha, double margin, double beta);

// fc -> relu -> fc -> L2 normalization.
class TripletHead {
 public:
  TripletHead() = default;
  TripletHead(int dim, int hidden, int out, Rng& rng);

  nn::Tensor<float> project(const nn::Tensor<float>& x) const;  // [N, D] -> [N, out], unit rows
  Embedding project(const Embedding& e) const;
  // Negative Euclidean distance of the projections.
  double score(const Embedding& a, const Embedding& b) const;

  nn::ParamList<float> parameters() const;
  int dim() const { return dim_; }
  int hidden() const { return hidden_; }
  int out() const { return out_; }
  Standardizer& standardizer() { return std_; }

 private:
  int dim_ = 0, hidden_ = 0, out_ = 0;
  Standardizer std_;
  nn::Linear<float> fc1_, fc2_;
};

struct TripletResult {
  TripletHead head;
  HeadLog log;
  std::vector<std::string> warnings;  // excluded classes
};

// Batches hold classes_per_batch classes x per_class samples. Every ordered
// anchor/positive pair in a batch takes the hardest semi-hard negative
// (d_ap < d_an < d_ap + alpha, squared distances), else a random negative
// violating alpha, else a random negative.
TripletResult train_triplet_head(const std::vector<Embedding>& embeddings, const std::vector<int>& labels,
                                 const TripletConfig& config);

void save_triplet_head(const std::filesystem::path& path, const TripletHead& head);
TripletHead load_triplet_head(const std::filesystem::path& path);

}  // namespace xspec::heads
