#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xspec/image/image.hpp"
#include "xspec/nn/layers.hpp"

namespace xspec::heads {

struct BackboneConfig {
  int in_channels = 1;
  std::array<int, 4> widths{16, 32, 64, 128};
  int epochs = 20;
  int batch_size = 16;
  double lr = 1e-3;
  int max_shift = 4;  // random translation augmentation, pixels
  std::uint64_t seed = 7;

  void validate() const;
};

std::string encode_backbone_config(const BackboneConfig& config);
BackboneConfig decode_backbone_config(std::string_view text);

// Four conv3x3 / batch-norm / relu / 2x2 max-pool blocks followed by global
// average pooling. The pooled vector is the embedding.
class Backbone {
 public:
  Backbone() = default;
  Backbone(const BackboneConfig& config, Rng& rng);

  // [N, C, H, W] -> [N, embedding_size()]
  nn::Tensor<float> forward(const nn::Tensor<float>& x, nn::NormMode mode) const;
  nn::ParamList<float> parameters() const;
  int embedding_size() const { return embedding_size_; }
  int in_channels() const { return in_channels_; }

 private:
  int embedding_size_ = 0;
  int in_channels_ = 1;
  std::vector<nn::Conv2d<float>> conv_;
  std::vector<nn::BatchNorm<float>> norm_;
};

using Embedding = std::vector<double>;

// Identification-trained backbone with its classifier removed. Embedding
// extraction uses running batch-norm statistics and records no graph.
struct EmbeddingModel {
  BackboneConfig config;
  Backbone backbone;

  Embedding embed(const img::SpectralImage& image) const;
  // Parallel across images.
  std::vector<Embedding> embed_all(const std::vector<img::SpectralImage>& images) const;
};

struct IdentificationLog {
  std::vector<double> loss;      // mean cross-entropy per epoch
  std::vector<double> accuracy;  // training top-1 per epoch
};

struct IdentificationResult {
  EmbeddingModel model;
  IdentificationLog log;
};

// Softmax identification training with Adam. labels are arbitrary class ids;
// at least two distinct ids are required.
IdentificationResult train_identification(const std::vector<img::SpectralImage>& images,
                                          const std::vector<int>& labels, const BackboneConfig& config);

// Backbone checkpoint plus key=value sidecar (<path> and <path>.cfg).
void save_embedding_model(const std::filesystem::path& path, const EmbeddingModel& model);
EmbeddingModel load_embedding_model(const std::filesystem::path& path);

// Converts to the backbone's channel count and model range [-1, 1].
nn::Tensor<float> image_batch(const std::vector<const img::SpectralImage*>& images, int channels);

}  // namespace xspec::heads
