#include <doctest.h>

#include <filesystem>
#include <string>

#include "xspec/eval/trials.hpp"
#include "xspec/pipeline/pipeline.hpp"
#include "xspec/util/files.hpp"

namespace fs = std::filesystem;
using namespace xspec;
using namespace xspec::pipeline;

namespace {

PipelineConfig tiny_config() {
  PipelineConfig c;
  c.dataset.identities = 6;
  c.dataset.captures = 5;
  c.dataset.train = 3;
  c.dataset.test = 2;
  c.dataset.render.size = 32;
  c.translator.epochs = 2;
  c.translator.ngf = 4;
  c.translator.ndf = 4;
  c.translator.disc_layers = 2;
  c.comparators = {"lbp_chi2", "hog_euclidean"};
  c.sync();
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) { fs::remove_all(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("pipeline config text") {
  const PipelineConfig c = tiny_config();
  const PipelineConfig back = decode_pipeline_config(encode_pipeline_config(c));
  CHECK(encode_pipeline_config(back) == encode_pipeline_config(c));
  CHECK(back.translator.image_size == 32);

  const PipelineConfig over = decode_pipeline_config("# comment\nseed=11\ncomparators=sift_ratio,lbp_chi2\n", c);
  CHECK(over.seed == 11);
  CHECK(over.translator.seed == 11);
  CHECK(over.comparators.size() == 2);
  CHECK(over.dataset.identities == 6);

  CHECK_THROWS_AS(decode_pipeline_config("colour=red\n"), std::invalid_argument);
  CHECK_THROWS_AS(decode_pipeline_config("epochs=many\n"), std::invalid_argument);
  CHECK_THROWS_AS(decode_pipeline_config("comparators=lbp_cosine\n"), std::invalid_argument);
  CHECK_THROWS_AS(decode_pipeline_config("size=48\n"), std::invalid_argument);
}

TEST_CASE("scenarios and fusion variants") {
  CHECK(scenarios().size() == 5);
  CHECK(find_scenario("NIR-(VIS->NIR)").slug == "nir_vis2nir");
  CHECK(find_scenario("vis_nir2vis").gallery == img::Spectrum::kVISSynth);
  CHECK_THROWS(find_scenario("NIR-THERMAL"));

  const auto two = fusion_variants({"lbp_chi2", "hog_euclidean"});
  REQUIRE(two.size() == 1);
  CHECK(two[0].first == "fused_lbp_hog");
  const auto three = fusion_variants(known_comparators());
  REQUIRE(three.size() == 2);
  CHECK(three[1].first == "fused_all");
  CHECK(three[1].second.size() == 3);
  CHECK(fusion_variants({"sift_ratio"}).empty());
}

TEST_CASE("efficacy text round trip") {
  Efficacy e{gan::Direction::kNirToVis, 30, 27, 0.0312, 0.125};
  const Efficacy back = decode_efficacy(encode_efficacy(e));
  CHECK(back.direction == e.direction);
  CHECK(back.pairs == 30);
  CHECK(back.improved == 27);
  CHECK(back.mean_translated == doctest::Approx(0.0312));
  CHECK(back.improved_fraction() == doctest::Approx(0.9));
}

TEST_CASE("stages name the command producing a missing input") {
  TempDir dir("xspec_pipeline_missing");
  const Layout layout{dir.path};
  const PipelineConfig c = tiny_config();
  try {
    stage_extract(c, layout);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("synth-gen") != std::string::npos);
  }
  stage_synth(c, layout);
  try {
    stage_translate(c, gan::Direction::kVisToNir, layout);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("train-translator") != std::string::npos);
  }
  try {
    stage_trials(c, layout);
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("translate") != std::string::npos);
  }
}

TEST_CASE("run_all on a tiny dataset") {
  TempDir dir("xspec_pipeline_tiny");
  const Layout layout{dir.path};
  const PipelineConfig c = tiny_config();
  const RunSummary s = run_all(c, layout);

  CHECK(s.efficacy.size() == 2);
  for (const auto& e : s.efficacy) CHECK(e.pairs == 12);
  // 5 scenarios x (2 comparators + 1 fusion)
  CHECK(s.metrics.size() == 15);
  const auto& row = s.row("NIR-NIR", "lbp_chi2");
  CHECK(row.genuine == 6);   // U T(T-1)/2
  CHECK(row.impostor == 30); // U(U-1)
  CHECK_THROWS(s.row("NIR-NIR", "sift_ratio"));

  const eval::TrialSet train = eval::load_trials(layout.trials_file(find_scenario("nir_vis"), eval::Role::kTrain));
  CHECK(eval::count_label(train, match::Label::kGenuine) == 6 * 3);

  const auto files = report_files(layout);
  const auto has = [&](const std::string& f) { return std::find(files.begin(), files.end(), fs::path(f)) != files.end(); };
  CHECK(has("summary.txt"));
  CHECK(has("det_overview.svg"));
  CHECK(has("translator_loss.svg"));
  CHECK(has("det/nir_vis2nir_fused_lbp_hog.csv"));
  const std::string summary = read_file(layout.reports_dir() / "summary.txt");
  CHECK(summary.find("NIR-(VIS->NIR)") != std::string::npos);
  CHECK(summary.find("translator vis2nir") != std::string::npos);

  // Rerunning the report stage from the stored scores reproduces it.
  const std::string before = read_file(layout.reports_dir() / "det_nir_vis.svg");
  stage_report(c, layout);
  CHECK(read_file(layout.reports_dir() / "det_nir_vis.svg") == before);
}
