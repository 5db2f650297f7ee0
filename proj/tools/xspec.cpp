#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "xspec/desc/descriptor.hpp"
#include "xspec/eval/report.hpp"
#include "xspec/eval/trials.hpp"
#include "xspec/gan/trainer.hpp"
#include "xspec/image/image_io.hpp"
#include "xspec/match/score_io.hpp"
#include "xspec/pipeline/pipeline.hpp"
#include "xspec/util/files.hpp"
#include "xspec/util/rng.hpp"

namespace fs = std::filesystem;
using namespace xspec;
using namespace xspec::pipeline;

namespace {

struct Options {
  std::string workdir = ".";
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> identities, captures, train, test, size, epochs;
  std::optional<double> lambda, lr;
  std::optional<std::string> comparators;
  std::string direction = "vis2nir";
  std::string model, in, out;
  std::string scores;
  std::optional<int> users, test_images;
};

const char* kStoredConfig = "config.txt";

// Stored workdir config, then --config, then flags.
PipelineConfig resolve_config(const Options& o, const Layout& layout) {
  PipelineConfig c;
  if (fs::exists(layout.root / kStoredConfig)) c = decode_pipeline_config(read_file(layout.root / kStoredConfig), c);
  if (!o.config_file.empty()) c = decode_pipeline_config(read_file(layout.root / o.config_file), c);
  if (o.seed) c.seed = *o.seed;
  if (o.identities) c.dataset.identities = *o.identities;
  if (o.captures) c.dataset.captures = *o.captures;
  if (o.train) c.dataset.train = *o.train;
  if (o.test) c.dataset.test = *o.test;
  if (o.size) c.dataset.render.size = *o.size;
  if (o.epochs) c.translator.epochs = *o.epochs;
  if (o.lambda) c.translator.lambda_l1 = *o.lambda;
  if (o.lr) c.translator.lr = *o.lr;
  if (o.comparators) c = decode_pipeline_config("comparators=" + *o.comparators, c);
  c.sync();
  c.validate();
  return c;
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

void translate_directory(const Options& o, const Layout& layout, std::uint64_t seed) {
  if (o.model.empty() || o.out.empty()) throw std::invalid_argument("translate --in needs --model and --out");
  const fs::path model_dir = layout.root / o.model, in = layout.root / o.in, out = layout.root / o.out;
  if (!fs::exists(model_dir / "translator.cfg"))
    throw std::runtime_error(model_dir.string() + " holds no translator; run `xspec train-translator` first");
  if (!fs::is_directory(in)) throw std::runtime_error(in.string() + " is not a directory");
  const gan::Translator model = gan::load_translator(model_dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  fs::create_directories(out);
  for (const auto& f : files) {
    const img::SpectralImage x = img::read_image(f);
    const std::string name = f.filename().string();
    const img::SpectralImage y = gan::translate(model, x, Rng::mix(seed, desc::fingerprint(name)));
    img::write_png(out / f.filename().replace_extension(".png"), y);
  }
  log_line("translated " + std::to_string(files.size()) + " images into " + out.string());
}

void eval_score_file(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error(path.string() + " not found; run `xspec score` first");
  const match::ScoreSet s = match::load_scores(path);
  std::vector<double> genuine, impostor;
  match::split_by_label(s, genuine, impostor);
  const std::string comparator = s.empty() ? "-" : s.front().comparator_id;
  std::cout << eval::summary_text({eval::evaluate(path.filename().string(), comparator, genuine, impostor)});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-spectral periocular recognition pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--workdir", o.workdir, "Directory all paths are relative to")->capture_default_str();
  app.add_option("--config", o.config_file, "key=value config file");
  app.add_option("--seed", o.seed, "Master seed");

  const auto add_dataset = [&](CLI::App* c) {
    c->add_option("--identities", o.identities, "Number of classes");
    c->add_option("--captures", o.captures, "Captures per class and spectrum");
    c->add_option("--train", o.train, "Training captures per class");
    c->add_option("--test", o.test, "Test captures per class");
    c->add_option("--size", o.size, "Image side in pixels");
  };
  const auto add_translator = [&](CLI::App* c) {
    c->add_option("--epochs", o.epochs, "Maximum translator epochs");
    c->add_option("--lambda", o.lambda, "L1 weight");
    c->add_option("--lr", o.lr, "Adam learning rate");
  };
  const auto add_direction = [&](CLI::App* c) {
    c->add_option("--direction", o.direction, "vis2nir or nir2vis")
        ->check(CLI::IsMember({"vis2nir", "nir2vis"}))
        ->capture_default_str();
  };
  const auto add_comparators = [&](CLI::App* c) {
    c->add_option("--comparators", o.comparators, "Comma-separated comparator ids");
  };

  auto* synth = app.add_subcommand("synth-gen", "Render the synthetic NIR/VIS dataset");
  add_dataset(synth);
  auto* train = app.add_subcommand("train-translator", "Train a translator for one direction");
  add_direction(train);
  add_translator(train);
  train->add_option("--size", o.size, "Image side in pixels");
  auto* translate = app.add_subcommand("translate", "Translate images with a trained model");
  add_direction(translate);
  translate->add_option("--model", o.model, "Model directory");
  translate->add_option("--in", o.in, "Input image directory");
  translate->add_option("--out", o.out, "Output image directory");
  auto* extract = app.add_subcommand("extract", "Compute LBP, HOG and SIFT features");
  add_comparators(extract);
  auto* trials = app.add_subcommand("trials", "Build trial lists, or print protocol counts");
  trials->add_option("--users", o.users, "Print counts for this many classes");
  trials->add_option("--test-images", o.test_images, "Test images per class (with --users)");
  auto* score = app.add_subcommand("score", "Score every trial with every comparator");
  add_comparators(score);
  auto* fuse = app.add_subcommand("fuse", "Train score fusion and fuse the test scores");
  add_comparators(fuse);
  auto* eval_cmd = app.add_subcommand("eval", "Print EER and GAR per scenario and comparator");
  add_comparators(eval_cmd);
  eval_cmd->add_option("--scores", o.scores, "Evaluate a single score file instead");
  auto* report = app.add_subcommand("report", "Write DET CSV files and SVG plots");
  add_comparators(report);
  auto* run_all_cmd = app.add_subcommand("run-all", "Run every stage in order");
  add_dataset(run_all_cmd);
  add_translator(run_all_cmd);
  add_comparators(run_all_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    const Layout layout{fs::path(o.workdir)};
    const gan::Direction direction = gan::parse_direction(o.direction);

    if (trials->parsed() && (o.users || o.test_images)) {
      if (!o.users || !o.test_images) throw std::invalid_argument("--users and --test-images go together");
      const eval::TrialSet t = eval::build_trials(eval::synthetic_classes(*o.users, *o.test_images));
      std::cout << "genuine " << eval::count_label(t, match::Label::kGenuine) << "\nimpostor "
                << eval::count_label(t, match::Label::kImpostor) << "\n";
      return 0;
    }
    if (eval_cmd->parsed() && !o.scores.empty()) {
      eval_score_file(layout.root / o.scores);
      return 0;
    }

    const PipelineConfig config = resolve_config(o, layout);
    if (synth->parsed() || run_all_cmd->parsed()) {
      fs::create_directories(layout.root);
      atomic_write(layout.root / kStoredConfig, encode_pipeline_config(config));
    }

    if (synth->parsed()) {
      stage_synth(config, layout, log_line);
    } else if (train->parsed()) {
      stage_train_translator(config, direction, layout, log_line);
    } else if (translate->parsed()) {
      if (!o.in.empty())
        translate_directory(o, layout, config.seed);
      else
        stage_translate(config, direction, layout, log_line);
    } else if (extract->parsed()) {
      stage_extract(config, layout, log_line);
    } else if (trials->parsed()) {
      stage_trials(config, layout, log_line);
    } else if (score->parsed()) {
      stage_score(config, layout, log_line);
    } else if (fuse->parsed()) {
      stage_fuse(config, layout, log_line);
    } else if (eval_cmd->parsed()) {
      const auto rows = stage_eval(config, layout);
      std::cout << eval::summary_text(rows);
    } else if (report->parsed()) {
      stage_report(config, layout, log_line);
    } else if (run_all_cmd->parsed()) {
      run_all(config, layout, log_line);
    }
  } catch (const std::exception& e) {
    std::cerr << "xspec: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
