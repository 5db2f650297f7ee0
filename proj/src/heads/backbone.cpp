#include "xspec/heads/backbone.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "xspec/match/score_io.hpp"
#include "xspec/nn/adam.hpp"
#include "xspec/nn/checkpoint.hpp"
#include "xspec/util/files.hpp"

namespace xspec::heads {

using nn::NormMode;
using nn::Tensor;

void BackboneConfig::validate() const {
  if (in_channels != 1 && in_channels != 3) throw std::invalid_argument("backbone: channels must be 1 or 3");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("backbone: widths must be positive");
  if (epochs < 0 || batch_size < 1) throw std::invalid_argument("backbone: invalid epochs or batch size");
  if (lr <= 0) throw std::invalid_argument("backbone: learning rate must be positive");
  if (max_shift < 0) throw std::invalid_argument("backbone: max_shift must be non-negative");
}

std::string encode_backbone_config(const BackboneConfig& c) {
  std::string out = "in_channels=" + std::to_string(c.in_channels) + "\nwidths=";
  for (std::size_t i = 0; i < c.widths.size(); ++i) out += (i ? "," : "") + std::to_string(c.widths[i]);
  out += "\nepochs=" + std::to_string(c.epochs) + "\nbatch_size=" + std::to_string(c.batch_size) +
         "\nlr=" + match::format_double(c.lr) + "\nmax_shift=" + std::to_string(c.max_shift) + "\nseed=" + std::to_string(c.seed) + "\n";
  return out;
}

BackboneConfig decode_backbone_config(std::string_view text) {
  BackboneConfig c;
  for (const std::string& line : split_lines(text)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("backbone config line without '=': " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "in_channels") c.in_channels = std::stoi(value);
    else if (key == "widths") {
      std::size_t pos = 0;
      for (int i = 0; i < 4; ++i) {
        const std::size_t comma = value.find(',', pos);
        c.widths[static_cast<std::size_t>(i)] = std::stoi(value.substr(pos, comma - pos));
        if (comma == std::string::npos && i < 3) throw std::invalid_argument("backbone widths need 4 values");
        pos = comma + 1;
      }
    } else if (key == "epochs") c.epochs = std::stoi(value);
    else if (key == "batch_size") c.batch_size = std::stoi(value);
    else if (key == "lr") c.lr = match::parse_double(value);
    else if (key == "max_shift") c.max_shift = std::stoi(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else throw std::invalid_argument("unknown backbone config key '" + key + "'");
  }
  c.validate();
  return c;
}

Backbone::Backbone(const BackboneConfig& config, Rng& rng) : in_channels_(config.in_channels) {
  config.validate();
  int in = config.in_channels;
  for (int w : config.widths) {
    conv_.emplace_back(in, w, 3, 1, 1, false, rng, std::sqrt(2.0 / (9.0 * in)));
    norm_.emplace_back(w);
    in = w;
  }
  embedding_size_ = in;
}

Tensor<float> Backbone::forward(const Tensor<float>& x, NormMode mode) const {
  if (x.ndim() != 4 || x.dim(1) != in_channels_)
    throw nn::DimensionError("backbone expects [N," + std::to_string(in_channels_) + ",H,W], got " +
                             nn::shape_str(x.shape()));
  Tensor<float> h = x;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    h = conv_[i](h);
    Tensor<float> mean = norm_[i].running_mean, var = norm_[i].running_var;
    h = nn::batch_norm(h, norm_[i].gamma, norm_[i].beta, mean, var, mode, norm_[i].momentum, norm_[i].eps);
    h = nn::max_pool2d(nn::relu(h), 2);
  }
  return nn::global_avg_pool(h);
}

nn::ParamList<float> Backbone::parameters() const {
  nn::ParamList<float> out;
  for (std::size_t i = 0; i < conv_.size(); ++i) {
    out.append("block" + std::to_string(i) + ".conv.", conv_[i].parameters());
    out.append("block" + std::to_string(i) + ".norm.", norm_[i].parameters());
  }
  return out;
}

Tensor<float> image_batch(const std::vector<const img::SpectralImage*>& images, int channels) {
  if (images.empty()) throw std::invalid_argument("image_batch: no images");
  const int h = images[0]->height, w = images[0]->width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<float> data;
  data.reserve(images.size() * plane * static_cast<std::size_t>(channels));
  for (const auto* im : images) {
    if (im->height != h || im->width != w) throw std::invalid_argument("image_batch: images differ in size");
    const img::SpectralImage src = channels == 1 ? img::to_grayscale(*im) : *im;
    if (src.channels != channels) throw std::invalid_argument("image_batch: channel mismatch");
    const Tensor<float> t = img::to_model_tensor(src);
    data.insert(data.end(), t.data().begin(), t.data().end());
  }
  return Tensor<float>({static_cast<int>(images.size()), channels, h, w}, std::move(data));
}

Embedding EmbeddingModel::embed(const img::SpectralImage& image) const {
  nn::NoGradGuard no_grad;
  const Tensor<float> e = backbone.forward(image_batch({&image}, backbone.in_channels()), NormMode::kRunning);
  return Embedding(e.data().begin(), e.data().end());
}

std::vector<Embedding> EmbeddingModel::embed_all(const std::vector<img::SpectralImage>& images) const {
  std::vector<Embedding> out(images.size());
  const long n = static_cast<long>(images.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = embed(images[static_cast<std::size_t>(i)]);
  return out;
}

namespace {

// Integer translation with edge clamping.
img::SpectralImage shifted(const img::SpectralImage& in, int dy, int dx) {
  img::SpectralImage out = in.with_same_tags(in.height, in.width, in.channels);
  for (int y = 0; y < in.height; ++y)
    for (int x = 0; x < in.width; ++x)
      for (int c = 0; c < in.channels; ++c)
        out.at(y, x, c) = in.at(std::clamp(y - dy, 0, in.height - 1), std::clamp(x - dx, 0, in.width - 1), c);
  return out;
}

}  // namespace

IdentificationResult train_identification(const std::vector<img::SpectralImage>& images,
                                          const std::vector<int>& labels, const BackboneConfig& config) {
  config.validate();
  if (images.size() != labels.size()) throw std::invalid_argument("train_identification: one label per image");
  std::map<int, int> index;
  for (int l : labels) index.emplace(l, 0);
  if (index.size() < 2) throw std::invalid_argument("train_identification: need at least two classes");
  int next = 0;
  for (auto& [id, k] : index) k = next++;
  std::vector<int> target(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) target[i] = index[labels[i]];

  Rng init(Rng::mix(config.seed, 1));
  IdentificationResult result;
  result.model.config = config;
  result.model.backbone = Backbone(config, init);
  nn::Linear<float> classifier(result.model.backbone.embedding_size(), static_cast<int>(index.size()), init);
  nn::ParamList<float> params = result.model.backbone.parameters();
  params.append("classifier.", classifier.parameters());
  nn::AdamState<float> opt(nn::AdamConfig{config.lr, 0.9, 0.999, 1e-8});
  Rng shuffle(Rng::mix(config.seed, 2));
  Rng augment(Rng::mix(config.seed, 3));

  std::vector<std::size_t> order(images.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle.shuffle(order);
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      if (end - start < 2 && order.size() > 1) continue;  // batch statistics need two samples
      std::vector<img::SpectralImage> moved;
      std::vector<int> y;
      for (std::size_t k = start; k < end; ++k) {
        const int span = 2 * config.max_shift + 1;
        const int dy = static_cast<int>(augment.below(static_cast<std::uint64_t>(span))) - config.max_shift;
        const int dx = static_cast<int>(augment.below(static_cast<std::uint64_t>(span))) - config.max_shift;
        moved.push_back(shifted(images[order[k]], dy, dx));
        y.push_back(target[order[k]]);
      }
      std::vector<const img::SpectralImage*> batch;
      for (const auto& m : moved) batch.push_back(&m);
      params.zero_grad();
      const Tensor<float> logits =
          classifier(result.model.backbone.forward(image_batch(batch, config.in_channels), NormMode::kTrain));
      const Tensor<float> loss = nn::cross_entropy(logits, y);
      nn::backward(loss);
      nn::adam_step(params.tensors(), opt);
      loss_sum += static_cast<double>(loss.item()) * static_cast<double>(y.size());
      const int k = logits.dim(1);
      for (std::size_t r = 0; r < y.size(); ++r) {
        const auto row = logits.data().subspan(r * static_cast<std::size_t>(k), static_cast<std::size_t>(k));
        correct += static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()) == y[r];
      }
    }
    result.log.loss.push_back(loss_sum / static_cast<double>(images.size()));
    result.log.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(images.size()));
  }
  result.model.backbone.parameters().set_requires_grad(false);
  return result;
}

void save_embedding_model(const std::filesystem::path& path, const EmbeddingModel& model) {
  nn::save_checkpoint(path, model.backbone.parameters());
  atomic_write(path.string() + ".cfg", encode_backbone_config(model.config));
}

EmbeddingModel load_embedding_model(const std::filesystem::path& path) {
  EmbeddingModel model;
  model.config = decode_backbone_config(read_file(path.string() + ".cfg"));
  Rng rng(0);
  model.backbone = Backbone(model.config, rng);
  nn::load_checkpoint(path, model.backbone.parameters());
  model.backbone.parameters().set_requires_grad(false);
  return model;
}

}  // namespace xspec::heads
