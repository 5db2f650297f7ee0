#include "xspec/pipeline/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xspec/desc/hog.hpp"
#include "xspec/desc/lbp.hpp"
#include "xspec/desc/sift.hpp"
#include "xspec/eval/fusion.hpp"
#include "xspec/eval/trials.hpp"
#include "xspec/gan/trainer.hpp"
#include "xspec/image/image_io.hpp"
#include "xspec/match/comparators.hpp"
#include "xspec/util/files.hpp"

namespace xspec::pipeline {

using eval::DatasetSplit;
using eval::ManifestEntry;
using eval::Role;
using img::Spectrum;

const std::vector<std::string>& known_comparators() {
  static const std::vector<std::string> ids{"lbp_chi2", "hog_euclidean", "sift_ratio"};
  return ids;
}

const std::vector<Scenario>& scenarios() {
  static const std::vector<Scenario> all{
      {"NIR-NIR", "nir_nir", Spectrum::kNIR, Spectrum::kNIR},
      {"VIS-VIS", "vis_vis", Spectrum::kVIS, Spectrum::kVIS},
      {"NIR-VIS", "nir_vis", Spectrum::kNIR, Spectrum::kVIS},
      {"NIR-(VIS->NIR)", "nir_vis2nir", Spectrum::kNIR, Spectrum::kNIRSynth},
      {"VIS-(NIR->VIS)", "vis_nir2vis", Spectrum::kVIS, Spectrum::kVISSynth},
  };
  return all;
}

const Scenario& find_scenario(std::string_view key) {
  for (const auto& s : scenarios())
    if (s.label == key || s.slug == key) return s;
  throw std::invalid_argument("unknown scenario '" + std::string(key) + "'");
}

void PipelineConfig::sync() {
  dataset.render.seed = seed;
  translator.seed = seed;
  translator.image_size = dataset.render.size;
}

void PipelineConfig::validate() const {
  if (comparators.empty()) throw std::invalid_argument("at least one comparator is required");
  for (const auto& c : comparators)
    if (std::find(known_comparators().begin(), known_comparators().end(), c) == known_comparators().end())
      throw std::invalid_argument("unknown comparator '" + c + "' (known: lbp_chi2, hog_euclidean, sift_ratio)");
  if (dataset.train < 2 || dataset.test < 2)
    throw std::invalid_argument("train and test need at least 2 captures per class for trials");
  if (dataset.captures < dataset.train + dataset.test)
    throw std::invalid_argument("captures must cover train + test");
  translator.validate();
}

std::string encode_pipeline_config(const PipelineConfig& c) {
  std::string comps;
  for (std::size_t i = 0; i < c.comparators.size(); ++i) comps += (i ? "," : "") + c.comparators[i];
  std::ostringstream out;
  out << "seed=" << c.seed << "\nidentities=" << c.dataset.identities << "\ncaptures=" << c.dataset.captures
      << "\ntrain=" << c.dataset.train << "\ntest=" << c.dataset.test << "\nsize=" << c.dataset.render.size
      << "\nepochs=" << c.translator.epochs << "\nngf=" << c.translator.ngf << "\nndf=" << c.translator.ndf
      << "\ndisc_layers=" << c.translator.disc_layers << "\nlambda=" << match::format_double(c.translator.lambda_l1)
      << "\nlr=" << match::format_double(c.translator.lr) << "\ncomparators=" << comps << "\n";
  return out.str();
}

PipelineConfig decode_pipeline_config(std::string_view text, PipelineConfig c) {
  for (const auto& raw : split_lines(text)) {
    const auto f = raw.find_first_not_of(" \t");
    if (f == std::string::npos || raw[f] == '#') continue;
    const std::string line = raw.substr(f);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line without '=': " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "seed") c.seed = std::stoull(value);
      else if (key == "identities") c.dataset.identities = std::stoi(value);
      else if (key == "captures") c.dataset.captures = std::stoi(value);
      else if (key == "train") c.dataset.train = std::stoi(value);
      else if (key == "test") c.dataset.test = std::stoi(value);
      else if (key == "size") c.dataset.render.size = std::stoi(value);
      else if (key == "epochs") c.translator.epochs = std::stoi(value);
      else if (key == "ngf") c.translator.ngf = std::stoi(value);
      else if (key == "ndf") c.translator.ndf = std::stoi(value);
      else if (key == "disc_layers") c.translator.disc_layers = std::stoi(value);
      else if (key == "lambda") c.translator.lambda_l1 = match::parse_double(value);
      else if (key == "lr") c.translator.lr = match::parse_double(value);
      else if (key == "comparators") {
        c.comparators.clear();
        std::size_t pos = 0;
        while (pos <= value.size()) {
          const std::size_t comma = std::min(value.find(',', pos), value.size());
          if (comma > pos) c.comparators.push_back(value.substr(pos, comma - pos));
          pos = comma + 1;
        }
      } else {
        throw std::invalid_argument("unknown config key '" + key + "'");
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const std::invalid_argument*>(&e) && std::string(e.what()).rfind("unknown", 0) == 0) throw;
      throw std::invalid_argument("bad value for config key '" + key + "': " + value);
    }
  }
  c.sync();
  c.validate();
  return c;
}

std::string encode_efficacy(const Efficacy& e) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "direction=%s\npairs=%zu\nimproved=%zu\nmean_translated=%.9f\nmean_identity=%.9f\n",
                std::string(gan::direction_name(e.direction)).c_str(), e.pairs, e.improved, e.mean_translated,
                e.mean_identity);
  return buf;
}

Efficacy decode_efficacy(std::string_view text) {
  Efficacy e;
  for (const auto& line : split_lines(text)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "direction") e.direction = gan::parse_direction(value);
    else if (key == "pairs") e.pairs = std::stoull(value);
    else if (key == "improved") e.improved = std::stoull(value);
    else if (key == "mean_translated") e.mean_translated = match::parse_double(value);
    else if (key == "mean_identity") e.mean_identity = match::parse_double(value);
  }
  return e;
}

namespace {

void say(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

void require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path))
    throw std::runtime_error(path.string() + " not found; run `xspec " + producer + "` first");
}

DatasetSplit load_real(const Layout& layout) {
  require(layout.manifest(), "synth-gen");
  DatasetSplit split = eval::load_manifest(layout.manifest());
  for (auto& e : split.entries) e.image_path = (fs::path("data") / e.image_path).generic_string();
  return split;
}

img::SpectralImage load_entry(const Layout& layout, const ManifestEntry& e) {
  img::SpectralImage im = img::read_image(layout.root / e.image_path);
  im.spectrum = e.spectrum;
  im.identity = e.class_id;
  im.capture_index = e.capture_index;
  im.eye = e.class_id % 2 ? img::Eye::kRight : img::Eye::kLeft;
  return im;
}

std::string id_of(const ManifestEntry& e) { return eval::image_id(e.class_id, e.spectrum, e.capture_index); }

// Pixel-aligned NIR/VIS pairs of one role, ordered by class and capture.
std::vector<img::PairedSample> load_pairs(const Layout& layout, const DatasetSplit& split, Role role) {
  std::vector<std::pair<ManifestEntry, ManifestEntry>> refs;
  for (int c : split.class_ids()) {
    const auto nir = split.select(c, role, Spectrum::kNIR);
    const auto vis = split.select(c, role, Spectrum::kVIS);
    for (const auto& n : nir)
      for (const auto& v : vis)
        if (v.capture_index == n.capture_index) refs.emplace_back(n, v);
  }
  std::vector<img::PairedSample> pairs(refs.size());
  std::string error;
  const long n = static_cast<long>(refs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      pairs[static_cast<std::size_t>(i)] = {load_entry(layout, refs[static_cast<std::size_t>(i)].first),
                                            load_entry(layout, refs[static_cast<std::size_t>(i)].second)};
    } catch (const std::exception& ex) {
#pragma omp critical(xspec_pipeline_error)
      if (error.empty()) error = ex.what();
    }
  }
  if (!error.empty()) throw std::runtime_error(error);
  return pairs;
}

gan::TranslatorConfig translator_config(const PipelineConfig& config, gan::Direction d) {
  gan::TranslatorConfig t = config.translator;
  t.direction = d;
  t.seed = Rng::mix(config.seed, d == gan::Direction::kVisToNir ? 1 : 2);
  t.image_size = config.dataset.render.size;
  return t;
}

fs::path feature_path(const Layout& layout, const std::string& kind, const std::string& id) {
  return layout.features_dir() / kind / (id + (kind == "sift" ? ".kp" : ".xdsc"));
}

std::string feature_kind(const std::string& comparator) {
  if (comparator == "lbp_chi2") return "lbp";
  if (comparator == "hog_euclidean") return "hog";
  return "sift";
}

const std::vector<Role>& roles() {
  static const std::vector<Role> r{Role::kTrain, Role::kTest};
  return r;
}

std::string missing_spectrum_hint(Spectrum s) {
  if (s == Spectrum::kNIRSynth) return "translate --direction vis2nir";
  if (s == Spectrum::kVISSynth) return "translate --direction nir2vis";
  return "synth-gen";
}

std::vector<int> score_labels(const match::ScoreSet& s) {
  std::vector<int> y;
  for (const auto& r : s) y.push_back(r.label == match::Label::kGenuine ? 1 : 0);
  return y;
}

}  // namespace

DatasetSplit load_all_images(const Layout& layout) {
  DatasetSplit split = load_real(layout);
  for (gan::Direction d : {gan::Direction::kVisToNir, gan::Direction::kNirToVis}) {
    const fs::path m = layout.translated_manifest(d);
    if (!fs::exists(m)) continue;
    DatasetSplit t = eval::load_manifest(m);
    for (auto& e : t.entries) {
      e.image_path = (fs::path("translated") / e.image_path).generic_string();
      split.entries.push_back(e);
    }
  }
  return split;
}

eval::DatasetSplit stage_synth(const PipelineConfig& config, const Layout& layout, const Logger& log) {
  say(log, "synth-gen: " + std::to_string(config.dataset.identities) + " classes x " +
               std::to_string(config.dataset.captures) + " captures at " + std::to_string(config.dataset.render.size) +
               "px -> " + layout.data_dir().string());
  synth::DatasetConfig d = config.dataset;
  d.render.seed = config.seed;
  return synth::gen_dataset(d, layout.data_dir());
}

void stage_train_translator(const PipelineConfig& config, gan::Direction direction, const Layout& layout,
                            const Logger& log) {
  const DatasetSplit split = load_real(layout);
  const std::vector<img::PairedSample> pairs = load_pairs(layout, split, Role::kTrain);
  const gan::TranslatorConfig tc = translator_config(config, direction);
  say(log, "train-translator " + std::string(gan::direction_name(direction)) + ": " + std::to_string(pairs.size()) +
               " training pairs, up to " + std::to_string(tc.epochs) + " epochs");
  const gan::TrainResult r = gan::train_translator(pairs, tc, [&](const gan::EpochLog& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  epoch %d: d_loss %.4f g_adv %.4f g_l1 %.4f val_l1 %.4f", e.epoch, e.d_loss,
                  e.g_adversarial, e.g_l1, e.val_l1);
    say(log, buf);
  });
  if (!r.log.warning.empty()) say(log, "  warning: " + r.log.warning);
  gan::save_translator(layout.model_dir(direction), r.model, &r.log);
}

Efficacy stage_translate(const PipelineConfig& config, gan::Direction direction, const Layout& layout,
                         const Logger& log) {
  require(layout.model_dir(direction) / "translator.cfg",
          "train-translator --direction " + std::string(gan::direction_name(direction)));
  const gan::Translator model = gan::load_translator(layout.model_dir(direction));
  const DatasetSplit split = load_real(layout);
  const Spectrum source = gan::source_spectrum(direction);
  const Spectrum target = gan::target_spectrum(direction);

  std::vector<ManifestEntry> inputs;
  for (const auto& e : split.entries)
    if (e.spectrum == source) inputs.push_back(e);
  say(log, "translate " + std::string(gan::direction_name(direction)) + ": " + std::to_string(inputs.size()) + " images");

  const fs::path out_dir = layout.translated_dir() / "images";
  fs::create_directories(out_dir);
  std::vector<ManifestEntry> outputs(inputs.size());
  std::vector<double> l1_translated(inputs.size(), -1), l1_identity(inputs.size(), -1);
  std::string error;
  const long n = static_cast<long>(inputs.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      const ManifestEntry& e = inputs[static_cast<std::size_t>(i)];
      const img::SpectralImage x = load_entry(layout, e);
      const img::SpectralImage y = gan::translate(model, x, Rng::mix(config.seed, desc::fingerprint(id_of(e))));
      ManifestEntry out = e;
      out.spectrum = y.spectrum;
      out.image_path = (fs::path("images") / (id_of(out) + ".png")).generic_string();
      img::write_png(layout.translated_dir() / out.image_path, y);
      outputs[static_cast<std::size_t>(i)] = out;
      if (e.role == Role::kTest) {
        const auto match = split.select(e.class_id, Role::kTest, target);
        for (const auto& t : match) {
          if (t.capture_index != e.capture_index) continue;
          const img::SpectralImage truth = img::to_grayscale(load_entry(layout, t));
          l1_translated[static_cast<std::size_t>(i)] = img::mean_abs_difference(img::to_grayscale(y), truth);
          l1_identity[static_cast<std::size_t>(i)] = img::mean_abs_difference(img::to_grayscale(x), truth);
        }
      }
    } catch (const std::exception& ex) {
#pragma omp critical(xspec_pipeline_error)
      if (error.empty()) error = ex.what();
    }
  }
  if (!error.empty()) throw std::runtime_error("translate: " + error);

  Efficacy eff;
  eff.direction = direction;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (l1_translated[i] < 0) continue;
    ++eff.pairs;
    eff.improved += l1_translated[i] < l1_identity[i];
    eff.mean_translated += l1_translated[i];
    eff.mean_identity += l1_identity[i];
  }
  if (eff.pairs) {
    eff.mean_translated /= static_cast<double>(eff.pairs);
    eff.mean_identity /= static_cast<double>(eff.pairs);
  }
  eval::save_manifest(layout.translated_manifest(direction), DatasetSplit{outputs});
  atomic_write(layout.efficacy_file(direction), encode_efficacy(eff));
  char buf[200];
  std::snprintf(buf, sizeof buf, "  held-out pairs improved: %zu/%zu (L1 %.4f vs identity %.4f)", eff.improved,
                eff.pairs, eff.mean_translated, eff.mean_identity);
  say(log, buf);
  return eff;
}

void stage_extract(const PipelineConfig& config, const Layout& layout, const Logger& log) {
  const DatasetSplit split = load_all_images(layout);
  std::set<std::string> kinds;
  for (const auto& c : config.comparators) kinds.insert(feature_kind(c));
  for (const auto& k : kinds) fs::create_directories(layout.features_dir() / k);
  say(log, "extract: " + std::to_string(split.entries.size()) + " images");
  std::string error;
  const long n = static_cast<long>(split.entries.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      const ManifestEntry& e = split.entries[static_cast<std::size_t>(i)];
      const img::SpectralImage gray = img::to_grayscale(load_entry(layout, e));
      const std::string id = id_of(e);
      if (kinds.count("lbp")) desc::save_descriptor(feature_path(layout, "lbp", id), desc::lbp_descriptor(gray));
      if (kinds.count("hog")) desc::save_descriptor(feature_path(layout, "hog", id), desc::hog_descriptor(gray));
      if (kinds.count("sift")) desc::save_keypoints(feature_path(layout, "sift", id), desc::sift_keypoints(gray));
    } catch (const std::exception& ex) {
#pragma omp critical(xspec_pipeline_error)
      if (error.empty()) error = ex.what();
    }
  }
  if (!error.empty()) throw std::runtime_error("extract: " + error);
}

void stage_trials(const PipelineConfig&, const Layout& layout, const Logger& log) {
  const DatasetSplit split = load_all_images(layout);
  for (const auto& s : scenarios()) {
    for (Spectrum sp : {s.probe, s.gallery})
      if (!split.has_spectrum(sp))
        throw std::runtime_error("scenario " + s.label + " needs " + std::string(img::spectrum_name(sp)) +
                                 " images; run `xspec " + missing_spectrum_hint(sp) + "` first");
    for (Role r : roles()) {
      std::vector<std::string> warnings;
      const eval::TrialSet t = eval::build_trials(split, s.probe, s.gallery, {}, &warnings, r);
      for (const auto& w : warnings) say(log, "  warning (" + s.label + "): " + w);
      fs::create_directories(layout.trials_file(s, r).parent_path());
      eval::save_trials(layout.trials_file(s, r), t);
      say(log, "trials " + s.label + " " + std::string(eval::role_name(r)) + ": " +
                   std::to_string(eval::count_label(t, match::Label::kGenuine)) + " genuine, " +
                   std::to_string(eval::count_label(t, match::Label::kImpostor)) + " impostor");
    }
  }
}

void stage_score(const PipelineConfig& config, const Layout& layout, const Logger& log) {
  for (const auto& s : scenarios()) {
    for (Role r : roles()) {
      require(layout.trials_file(s, r), "trials");
      const eval::TrialSet trials = eval::load_trials(layout.trials_file(s, r));
      std::vector<std::string> ids;
      for (const auto& t : trials) {
        ids.push_back(t.probe);
        ids.push_back(t.gallery);
      }
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

      for (const auto& comparator : config.comparators) {
        const std::string kind = feature_kind(comparator);
        std::map<std::string, std::size_t> slot;
        for (std::size_t i = 0; i < ids.size(); ++i) slot[ids[i]] = i;
        std::vector<desc::Descriptor> descriptors(kind == "sift" ? 0 : ids.size());
        std::vector<desc::KeypointSet> keypoints(kind == "sift" ? ids.size() : 0);
        for (const auto& id : ids) require(feature_path(layout, kind, id), "extract");
        const long nid = static_cast<long>(ids.size());
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < nid; ++i) {
          const fs::path p = feature_path(layout, kind, ids[static_cast<std::size_t>(i)]);
          if (kind == "sift")
            keypoints[static_cast<std::size_t>(i)] = desc::load_keypoints(p);
          else
            descriptors[static_cast<std::size_t>(i)] = desc::load_descriptor(p);
        }
        match::ScoreSet scores(trials.size());
        const long nt = static_cast<long>(trials.size());
#pragma omp parallel for schedule(static)
        for (long i = 0; i < nt; ++i) {
          const eval::Trial& t = trials[static_cast<std::size_t>(i)];
          const std::size_t a = slot.at(t.probe), b = slot.at(t.gallery);
          double v = 0;
          if (comparator == "lbp_chi2") v = match::canonical(match::chi2_distance(descriptors[a], descriptors[b]));
          else if (comparator == "hog_euclidean")
            v = match::canonical(match::euclidean_distance(descriptors[a], descriptors[b]));
          else v = match::sift_match_score(keypoints[a], keypoints[b]).value;
          scores[static_cast<std::size_t>(i)] = {t.probe, t.gallery, comparator, t.label, v};
        }
        fs::create_directories(layout.scores_file(s, r, comparator).parent_path());
        match::save_scores(layout.scores_file(s, r, comparator), scores);
      }
      say(log, "score " + s.label + " " + std::string(eval::role_name(r)) + ": " + std::to_string(trials.size()) +
                   " trials x " + std::to_string(config.comparators.size()) + " comparators");
    }
  }
}

std::vector<std::pair<std::string, std::vector<std::string>>> fusion_variants(
    const std::vector<std::string>& comparators) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  const auto has = [&](const char* c) { return std::find(comparators.begin(), comparators.end(), c) != comparators.end(); };
  if (has("lbp_chi2") && has("hog_euclidean")) out.push_back({"fused_lbp_hog", {"lbp_chi2", "hog_euclidean"}});
  if (comparators.size() >= 2 && !(comparators.size() == 2 && !out.empty())) out.push_back({"fused_all", comparators});
  return out;
}

std::vector<std::string> evaluated_comparators(const PipelineConfig& config) {
  std::vector<std::string> out = config.comparators;
  for (const auto& [name, parts] : fusion_variants(config.comparators)) out.push_back(name);
  return out;
}

void stage_fuse(const PipelineConfig& config, const Layout& layout, const Logger& log) {
  for (const auto& s : scenarios()) {
    for (const auto& [name, parts] : fusion_variants(config.comparators)) {
      std::vector<match::ScoreSet> train, test;
      for (const auto& c : parts) {
        require(layout.scores_file(s, Role::kTrain, c), "score");
        require(layout.scores_file(s, Role::kTest, c), "score");
        train.push_back(match::load_scores(layout.scores_file(s, Role::kTrain, c)));
        test.push_back(match::load_scores(layout.scores_file(s, Role::kTest, c)));
      }
      const auto matrix = [&](const std::vector<match::ScoreSet>& sets) {
        eval::ScoreMatrix m;
        m.rows = sets[0].size();
        m.cols = sets.size();
        m.values.resize(m.rows * m.cols);
        for (std::size_t c = 0; c < m.cols; ++c) {
          if (sets[c].size() != m.rows) throw std::runtime_error("fuse: score files of " + s.label + " differ in length");
          for (std::size_t r = 0; r < m.rows; ++r) {
            if (sets[c][r].probe_id != sets[0][r].probe_id || sets[c][r].gallery_id != sets[0][r].gallery_id)
              throw std::runtime_error("fuse: score files of " + s.label + " list trials in different orders");
            m.values[r * m.cols + c] = sets[c][r].score;
          }
        }
        return m;
      };
      const eval::FusionModel model = eval::train_fusion(matrix(train), score_labels(train[0]));
      fs::create_directories(layout.fusion_file(s, name).parent_path());
      atomic_write(layout.fusion_file(s, name), eval::encode_fusion(model));
      const std::vector<double> fused = eval::apply_fusion(model, matrix(test));
      match::ScoreSet out = test[0];
      for (std::size_t r = 0; r < out.size(); ++r) {
        out[r].comparator_id = name;
        out[r].score = fused[r];
      }
      match::save_scores(layout.scores_file(s, Role::kTest, name), out);
      say(log, "fuse " + s.label + " " + name + ": " + std::to_string(model.iterations) + " iterations");
    }
  }
}

std::vector<eval::MetricRow> stage_eval(const PipelineConfig& config, const Layout& layout, const Logger& log) {
  std::vector<eval::MetricRow> rows;
  for (const auto& s : scenarios())
    for (const auto& c : evaluated_comparators(config)) {
      const fs::path p = layout.scores_file(s, Role::kTest, c);
      require(p, c.rfind("fused", 0) == 0 ? "fuse" : "score");
      std::vector<double> genuine, impostor;
      match::split_by_label(match::load_scores(p), genuine, impostor);
      rows.push_back(eval::evaluate(s.label, c, genuine, impostor));
    }
  std::string text = eval::summary_text(rows);
  for (gan::Direction d : {gan::Direction::kVisToNir, gan::Direction::kNirToVis}) {
    if (!fs::exists(layout.efficacy_file(d))) continue;
    const Efficacy e = decode_efficacy(read_file(layout.efficacy_file(d)));
    char buf[200];
    std::snprintf(buf, sizeof buf, "translator %s: %zu/%zu held-out pairs improved, L1 %.4f vs identity %.4f\n",
                  std::string(gan::direction_name(d)).c_str(), e.improved, e.pairs, e.mean_translated,
                  e.mean_identity);
    text += buf;
  }
  fs::create_directories(layout.reports_dir());
  atomic_write(layout.reports_dir() / "summary.txt", text);
  say(log, text);
  return rows;
}

namespace {

std::vector<gan::EpochLog> read_training_log(const fs::path& path) {
  std::vector<gan::EpochLog> out;
  for (const auto& line : split_lines(read_file(path))) {
    if (line.empty() || line[0] == '#' || line.rfind("epoch", 0) == 0) continue;
    const auto f = split_ws(line);
    if (f.size() < 5) continue;
    gan::EpochLog e;
    e.epoch = std::stoi(f[0]);
    e.d_loss = match::parse_double(f[1]);
    e.g_adversarial = match::parse_double(f[2]);
    e.g_l1 = match::parse_double(f[3]);
    e.val_l1 = match::parse_double(f[4]);
    out.push_back(e);
  }
  return out;
}

}  // namespace

void stage_report(const PipelineConfig& config, const Layout& layout, const Logger& log) {
  const fs::path dir = layout.reports_dir();
  fs::create_directories(dir / "det");
  std::vector<std::pair<std::string, eval::DetCurve>> overview;
  const std::vector<std::string> comps = evaluated_comparators(config);
  const std::string headline = fusion_variants(config.comparators).empty() ? comps.front()
                                                                             : fusion_variants(config.comparators).back().first;
  for (const auto& s : scenarios()) {
    std::vector<std::pair<std::string, eval::DetCurve>> curves;
    for (const auto& c : comps) {
      const fs::path p = layout.scores_file(s, Role::kTest, c);
      require(p, c.rfind("fused", 0) == 0 ? "fuse" : "score");
      std::vector<double> genuine, impostor;
      match::split_by_label(match::load_scores(p), genuine, impostor);
      const eval::DetCurve curve = eval::compute_det(genuine, impostor);
      atomic_write(dir / "det" / (s.slug + "_" + c + ".csv"), eval::det_csv(curve));
      curves.emplace_back(c, curve);
      if (c == headline) overview.emplace_back(s.label, curve);
    }
    atomic_write(dir / ("det_" + s.slug + ".svg"), eval::svg_det_plot("DET " + s.label, curves));
  }
  atomic_write(dir / "det_overview.svg", eval::svg_det_plot("DET per scenario (" + headline + ")", overview));

  std::vector<eval::Series> losses;
  for (gan::Direction d : {gan::Direction::kVisToNir, gan::Direction::kNirToVis}) {
    const fs::path p = layout.model_dir(d) / "training_log.txt";
    if (!fs::exists(p)) continue;
    eval::Series train{std::string(gan::direction_name(d)) + " train L1", {}};
    eval::Series held{std::string(gan::direction_name(d)) + " held-out L1", {}};
    for (const auto& e : read_training_log(p)) {
      train.points.emplace_back(e.epoch, e.g_l1);
      if (e.val_l1 >= 0) held.points.emplace_back(e.epoch, e.val_l1);
    }
    losses.push_back(train);
    if (!held.points.empty()) losses.push_back(held);
  }
  if (!losses.empty())
    atomic_write(dir / "translator_loss.svg", eval::svg_line_plot("Translator L1", "epoch", "L1", losses));
  stage_eval(config, layout, {});
  say(log, "report: wrote " + std::to_string(report_files(layout).size()) + " files under " + dir.string());
}

const eval::MetricRow& RunSummary::row(std::string_view scenario, std::string_view comparator) const {
  for (const auto& r : metrics)
    if (r.scenario == scenario && r.comparator == comparator) return r;
  throw std::out_of_range("no metric row for " + std::string(scenario) + " / " + std::string(comparator));
}

RunSummary run_all(const PipelineConfig& input, const Layout& layout, const Logger& log) {
  PipelineConfig config = input;
  config.sync();
  config.validate();
  fs::create_directories(layout.root);
  stage_synth(config, layout, log);
  RunSummary summary;
  for (gan::Direction d : {gan::Direction::kVisToNir, gan::Direction::kNirToVis}) {
    stage_train_translator(config, d, layout, log);
    summary.efficacy.push_back(stage_translate(config, d, layout, log));
  }
  stage_extract(config, layout, log);
  stage_trials(config, layout, log);
  stage_score(config, layout, log);
  stage_fuse(config, layout, log);
  summary.metrics = stage_eval(config, layout, log);
  stage_report(config, layout, log);
  return summary;
}

std::vector<fs::path> report_files(const Layout& layout) {
  std::vector<fs::path> out;
  if (!fs::exists(layout.reports_dir())) return out;
  for (const auto& e : fs::recursive_directory_iterator(layout.reports_dir()))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), layout.reports_dir()));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace xspec::pipeline
