#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "xspec/eval/report.hpp"
#include "xspec/eval/split.hpp"
#include "xspec/gan/translator_config.hpp"
#include "xspec/synth/synthdata.hpp"

namespace xspec::pipeline {

namespace fs = std::filesystem;

// Comparator ids: "lbp_chi2", "hog_euclidean", "sift_ratio".
const std::vector<std::string>& known_comparators();

struct Scenario {
  std::string label;  // e.g. "NIR-(VIS->NIR)"
  std::string slug;   // file-name form, e.g. "nir_vis2nir"
  img::Spectrum probe;
  img::Spectrum gallery;
};

// NIR-NIR, VIS-VIS, NIR-VIS, NIR-(VIS->NIR), VIS-(NIR->VIS).
const std::vector<Scenario>& scenarios();
const Scenario& find_scenario(std::string_view label_or_slug);

struct PipelineConfig {
  std::uint64_t seed = 7;
  synth::DatasetConfig dataset{};
  gan::TranslatorConfig translator{};
  std::vector<std::string> comparators{"lbp_chi2", "hog_euclidean", "sift_ratio"};

  // Propagates the seed and image size into the module configs.
  void sync();
  void validate() const;
};

// key=value lines: seed, identities, captures, train, test, size, epochs,
// ngf, ndf, disc_layers, lambda, lr, comparators (comma separated).
std::string encode_pipeline_config(const PipelineConfig& config);
PipelineConfig decode_pipeline_config(std::string_view text, PipelineConfig base = {});

// Artifact locations under a work directory.
struct Layout {
  fs::path root;

  fs::path data_dir() const { return root / "data"; }
  fs::path manifest() const { return data_dir() / "manifest.txt"; }
  fs::path model_dir(gan::Direction d) const { return root / "models" / std::string(gan::direction_name(d)); }
  fs::path translated_dir() const { return root / "translated"; }
  fs::path translated_manifest(gan::Direction d) const {
    return translated_dir() / ("manifest_" + std::string(gan::direction_name(d)) + ".txt");
  }
  fs::path efficacy_file(gan::Direction d) const {
    return translated_dir() / ("efficacy_" + std::string(gan::direction_name(d)) + ".txt");
  }
  fs::path features_dir() const { return root / "features"; }
  fs::path trials_file(const Scenario& s, eval::Role r) const {
    return root / "trials" / (s.slug + "_" + std::string(eval::role_name(r)) + ".txt");
  }
  fs::path scores_file(const Scenario& s, eval::Role r, const std::string& comparator) const {
    return root / "scores" / s.slug / (std::string(eval::role_name(r)) + "_" + comparator + ".txt");
  }
  fs::path fusion_file(const Scenario& s, const std::string& name) const {
    return root / "fusion" / (s.slug + "_" + name + ".txt");
  }
  fs::path reports_dir() const { return root / "reports"; }
};

using Logger = std::function<void(const std::string&)>;

// Held-out translation quality on test pairs.
struct Efficacy {
  gan::Direction direction = gan::Direction::kVisToNir;
  std::size_t pairs = 0;
  std::size_t improved = 0;  // L1(G(x), y) < L1(x, y)
  double mean_translated = 0;
  double mean_identity = 0;

  double improved_fraction() const { return pairs ? static_cast<double>(improved) / static_cast<double>(pairs) : 0; }
};

std::string encode_efficacy(const Efficacy& e);
Efficacy decode_efficacy(std::string_view text);

// Stages. Each reads its inputs from the layout and fails with a message
// naming the command that produces a missing input.
eval::DatasetSplit stage_synth(const PipelineConfig& config, const Layout& layout, const Logger& log = {});
void stage_train_translator(const PipelineConfig& config, gan::Direction direction, const Layout& layout,
                            const Logger& log = {});
Efficacy stage_translate(const PipelineConfig& config, gan::Direction direction, const Layout& layout,
                         const Logger& log = {});
void stage_extract(const PipelineConfig& config, const Layout& layout, const Logger& log = {});
void stage_trials(const PipelineConfig& config, const Layout& layout, const Logger& log = {});
void stage_score(const PipelineConfig& config, const Layout& layout, const Logger& log = {});
void stage_fuse(const PipelineConfig& config, const Layout& layout, const Logger& log = {});
std::vector<eval::MetricRow> stage_eval(const PipelineConfig& config, const Layout& layout, const Logger& log = {});
void stage_report(const PipelineConfig& config, const Layout& layout, const Logger& log = {});

// Fusion variants of a comparator list: "fused_lbp_hog" when both are
// present and "fused_all" for two or more comparators.
std::vector<std::pair<std::string, std::vector<std::string>>> fusion_variants(
    const std::vector<std::string>& comparators);

// Comparators with score files for a scenario's test trials, fusions included.
std::vector<std::string> evaluated_comparators(const PipelineConfig& config);

// The split of real images plus every translated manifest present.
eval::DatasetSplit load_all_images(const Layout& layout);

struct RunSummary {
  std::vector<eval::MetricRow> metrics;
  std::vector<Efficacy> efficacy;

  const eval::MetricRow& row(std::string_view scenario, std::string_view comparator) const;
};

RunSummary run_all(const PipelineConfig& config, const Layout& layout, const Logger& log = {});

// Relative paths of every file under reports/, sorted.
std::vector<fs::path> report_files(const Layout& layout);

}  // namespace xspec::pipeline
