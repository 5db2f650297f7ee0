#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "xspec/gan/discriminator.hpp"
#include "xspec/gan/generator.hpp"
#include "xspec/gan/losses.hpp"
#include "xspec/image/image.hpp"
#include "xspec/nn/adam.hpp"

namespace xspec::gan {

struct Translator {
  TranslatorConfig config;
  Generator<float> generator;
  Discriminator<float> discriminator;
};

// Fresh networks initialized from config.seed.
Translator make_translator(const TranslatorConfig& config);

struct TrainState {
  nn::AdamState<float> g_opt;
  nn::AdamState<float> d_opt;
  Rng dropout_rng;
  std::size_t clamped = 0;  // saturated log evaluations so far

  explicit TrainState(const TranslatorConfig& config);
};

struct StepLosses {
  double d_loss = 0;
  double g_adversarial = 0;
  double g_l1 = 0;  // unweighted, model space
};

// One discriminator update on (real, detached fake) followed by one
// generator update through the refreshed discriminator. x and y are
// [1, C, S, S] model-space tensors.
StepLosses train_step(Translator& model, TrainState& state, const nn::Tensor<float>& x,
                      const nn::Tensor<float>& y);

struct EpochLog {
  int epoch = 0;
  double d_loss = 0;
  double g_adversarial = 0;
  double g_l1 = 0;
  double val_l1 = -1;  // storage-range L1 on held-out pairs, -1 without a held-out set
  std::size_t clamped = 0;
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  bool stopped_early = false;
  std::size_t train_pairs = 0;
  std::size_t val_pairs = 0;
  std::string warning;  // discriminator coverage note, if any
};

std::string format_training_log(const TrainingLog& log);

struct TrainResult {
  Translator model;
  TrainingLog log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Trains on pairs oriented by config.direction. Throws std::invalid_argument
// for an empty or mis-sized set and std::runtime_error on a non-finite loss.
TrainResult train_translator(const std::vector<img::PairedSample>& pairs,
                             const TranslatorConfig& config, const EpochCallback& on_epoch = {});

// Source / target side of a pair for the translator's direction, converted
// to the configured channel count.
img::SpectralImage translator_input(const img::PairedSample& pair, const TranslatorConfig& config);
img::SpectralImage translator_target(const img::PairedSample& pair, const TranslatorConfig& config);

// Generator inference with batch statistics and dropout drawn from
// dropout_seed. The result carries the translated spectrum tag.
img::SpectralImage translate(const Generator<float>& generator, const img::SpectralImage& image,
                             std::uint64_t dropout_seed = 0);
img::SpectralImage translate(const Translator& model, const img::SpectralImage& image,
                             std::uint64_t dropout_seed = 0);

// Model directory: generator.xspt, discriminator.xspt, translator.cfg and,
// when given, training_log.txt.
void save_translator(const std::filesystem::path& dir, const Translator& model,
                     const TrainingLog* log = nullptr);
Translator load_translator(const std::filesystem::path& dir);

}  // namespace xspec::gan
