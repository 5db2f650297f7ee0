#include "xspec/gan/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "xspec/nn/checkpoint.hpp"
#include "xspec/util/files.hpp"

namespace xspec::gan {

using nn::NormMode;
using nn::Tensor;

namespace {

enum Stream : std::uint64_t { kGenInit = 1, kDiscInit, kDropout, kShuffle, kHoldout };

nn::AdamConfig adam_config(const TranslatorConfig& c) { return {c.lr, c.beta1, c.beta2, 1e-8}; }

img::SpectralImage with_channels(const img::SpectralImage& image, int channels) {
  if (image.channels == channels) return image;
  if (channels == 1) return img::to_grayscale(image);
  throw std::invalid_argument("translator expects 3-channel images but got a single-channel one");
}

}  // namespace

Translator make_translator(const TranslatorConfig& config) {
  config.validate();
  Translator t;
  t.config = config;
  Rng g_rng(Rng::mix(config.seed, kGenInit));
  Rng d_rng(Rng::mix(config.seed, kDiscInit));
  t.generator = Generator<float>(config, g_rng);
  t.discriminator = Discriminator<float>(config, d_rng);
  return t;
}

TrainState::TrainState(const TranslatorConfig& config)
    : g_opt(adam_config(config)),
      d_opt(adam_config(config)),
      dropout_rng(Rng::mix(config.seed, kDropout)) {}

StepLosses train_step(Translator& model, TrainState& state, const Tensor<float>& x,
                      const Tensor<float>& y) {
  const auto g_params = model.generator.parameters();
  const auto d_params = model.discriminator.parameters();
  Tensor<float> fake = model.generator.forward(x, NormMode::kTrain, state.dropout_rng);

  StepLosses out;
  d_params.zero_grad();
  Tensor<float> d_loss =
      discriminator_loss(model.discriminator, x, y, fake.detach(), NormMode::kTrain, &state.clamped);
  nn::backward(d_loss);
  nn::adam_step(d_params.tensors(), state.d_opt);
  out.d_loss = d_loss.item();

  g_params.zero_grad();
  d_params.set_requires_grad(false);
  GeneratorLoss<float> g_loss = generator_loss(model.discriminator, x, y, fake, model.config.lambda_l1,
                                               NormMode::kBatchStats, &state.clamped);
  nn::backward(g_loss.total);
  d_params.set_requires_grad(true);
  nn::adam_step(g_params.tensors(), state.g_opt);
  out.g_adversarial = g_loss.adversarial.item();
  out.g_l1 = g_loss.l1.item();
  return out;
}

img::SpectralImage translator_input(const img::PairedSample& pair, const TranslatorConfig& config) {
  const auto& src = config.direction == Direction::kVisToNir ? pair.vis : pair.nir;
  return with_channels(src, config.in_channels);
}

img::SpectralImage translator_target(const img::PairedSample& pair, const TranslatorConfig& config) {
  const auto& dst = config.direction == Direction::kVisToNir ? pair.nir : pair.vis;
  return with_channels(dst, config.out_channels);
}

img::SpectralImage translate(const Generator<float>& generator, const img::SpectralImage& image,
                             std::uint64_t dropout_seed) {
  if (image.height != generator.image_size() || image.width != generator.image_size())
    throw std::invalid_argument("translate: image is " + std::to_string(image.height) + "x" +
                                std::to_string(image.width) + " but the generator expects " +
                                std::to_string(generator.image_size()) + "x" +
                                std::to_string(generator.image_size()));
  const img::SpectralImage input = with_channels(image, generator.in_channels());
  nn::NoGradGuard no_grad;
  Rng rng(dropout_seed);
  const Tensor<float> out = generator.forward(img::to_model_tensor(input), NormMode::kBatchStats, rng);
  img::SpectralImage result = img::from_model_tensor(out, image);
  result.spectrum = img::translated_tag(image.spectrum);
  return result;
}

img::SpectralImage translate(const Translator& model, const img::SpectralImage& image,
                             std::uint64_t dropout_seed) {
  return translate(model.generator, image, dropout_seed);
}

TrainResult train_translator(const std::vector<img::PairedSample>& pairs,
                             const TranslatorConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (pairs.empty()) throw std::invalid_argument("train_translator: empty training set");
  std::vector<Tensor<float>> xs, ys;
  std::vector<img::SpectralImage> src_images, dst_images;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    img::SpectralImage s = translator_input(pairs[i], config);
    img::SpectralImage t = translator_target(pairs[i], config);
    if (s.height != config.image_size || s.width != config.image_size || t.height != s.height ||
        t.width != s.width)
      throw std::invalid_argument("train_translator: pair " + std::to_string(i) + " is not " +
                                  std::to_string(config.image_size) + "x" +
                                  std::to_string(config.image_size) + " and pixel-aligned");
    src_images.push_back(std::move(s));
    dst_images.push_back(std::move(t));
  }

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng holdout_rng(Rng::mix(config.seed, kHoldout));
  holdout_rng.shuffle(order);
  std::size_t n_val = static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(pairs.size())));
  if (n_val >= pairs.size()) n_val = pairs.size() - 1;
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<long>(n_val), order.end());
  for (std::size_t i : train) {
    xs.push_back(img::to_model_tensor(src_images[i]));
    ys.push_back(img::to_model_tensor(dst_images[i]));
  }

  TrainResult result{make_translator(config), {}};
  TrainingLog& log = result.log;
  log.train_pairs = train.size();
  log.val_pairs = val.size();
  log.warning = coverage_warning(config.image_size, config.disc_layers);
  TrainState state(config);
  Rng shuffle_rng(Rng::mix(config.seed, kShuffle));
  const auto g_params = result.model.generator.parameters();
  Translator best = make_translator(config);
  double best_val = INFINITY;
  int since_best = 0;

  std::vector<std::size_t> batch(train.size());
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(batch.begin(), batch.end(), 0);
    shuffle_rng.shuffle(batch);
    EpochLog e;
    e.epoch = epoch;
    for (std::size_t step = 0; step < batch.size(); ++step) {
      const std::size_t k = batch[step];
      const StepLosses l = train_step(result.model, state, xs[k], ys[k]);
      if (!std::isfinite(l.d_loss) || !std::isfinite(l.g_adversarial) || !std::isfinite(l.g_l1)) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "non-finite loss at epoch %d step %zu (pair %zu): d=%g g_adv=%g g_l1=%g, "
                      "%zu clamped log evaluations so far",
                      epoch, step, train[k], l.d_loss, l.g_adversarial, l.g_l1, state.clamped);
        throw std::runtime_error(buf);
      }
      e.d_loss += l.d_loss;
      e.g_adversarial += l.g_adversarial;
      e.g_l1 += l.g_l1;
    }
    const double n = static_cast<double>(batch.size());
    e.d_loss /= n;
    e.g_adversarial /= n;
    e.g_l1 /= n;
    e.clamped = state.clamped;
    if (!val.empty()) {
      double acc = 0;
      for (std::size_t i : val)
        acc += img::mean_abs_difference(translate(result.model.generator, src_images[i], i), dst_images[i]);
      e.val_l1 = acc / static_cast<double>(val.size());
    }
    log.epochs.push_back(e);
    if (on_epoch) on_epoch(e);
    if (val.empty()) {
      log.best_epoch = epoch;
      continue;
    }
    if (e.val_l1 < best_val) {
      best_val = e.val_l1;
      log.best_epoch = epoch;
      since_best = 0;
      nn::copy_values(g_params, best.generator.parameters());
      nn::copy_values(result.model.discriminator.parameters(), best.discriminator.parameters());
    } else if (++since_best >= config.patience) {
      log.stopped_early = true;
      break;
    }
  }
  if (!val.empty() && log.best_epoch > 0) {
    nn::copy_values(best.generator.parameters(), g_params);
    nn::copy_values(best.discriminator.parameters(), result.model.discriminator.parameters());
  }
  return result;
}

std::string format_training_log(const TrainingLog& log) {
  std::ostringstream out;
  out << "# train_pairs=" << log.train_pairs << " val_pairs=" << log.val_pairs
      << " best_epoch=" << log.best_epoch << " stopped_early=" << (log.stopped_early ? 1 : 0) << "\n";
  if (!log.warning.empty()) out << "# warning: " << log.warning << "\n";
  out << "epoch d_loss g_adversarial g_l1 val_l1 clamped\n";
  char buf[160];
  for (const auto& e : log.epochs) {
    std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f %zu\n", e.epoch, e.d_loss, e.g_adversarial,
                  e.g_l1, e.val_l1, e.clamped);
    out << buf;
  }
  return out.str();
}

void save_translator(const std::filesystem::path& dir, const Translator& model, const TrainingLog* log) {
  std::filesystem::create_directories(dir);
  nn::save_checkpoint(dir / "generator.xspt", model.generator.parameters());
  nn::save_checkpoint(dir / "discriminator.xspt", model.discriminator.parameters());
  atomic_write(dir / "translator.cfg", encode_config(model.config));
  if (log) atomic_write(dir / "training_log.txt", format_training_log(*log));
}

Translator load_translator(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("translator model directory " + dir.string() + " does not exist");
  const TranslatorConfig config = decode_config(read_file(dir / "translator.cfg"));
  Translator model = make_translator(config);
  nn::load_checkpoint(dir / "generator.xspt", model.generator.parameters());
  nn::load_checkpoint(dir / "discriminator.xspt", model.discriminator.parameters());
  return model;
}

}  // namespace xspec::gan
