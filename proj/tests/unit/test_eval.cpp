#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "support/metric_oracle.hpp"
#include "xspec/eval/det.hpp"
#include "xspec/eval/fusion.hpp"
#include "xspec/eval/report.hpp"
#include "xspec/eval/split.hpp"
#include "xspec/eval/trials.hpp"
#include "xspec/util/rng.hpp"

using namespace xspec;
using match::Label;

namespace {

void gaussian_scores(Rng& rng, int n, double mu, double sigma, std::vector<double>& out) {
  for (int i = 0; i < n; ++i) out.push_back(rng.normal(mu, sigma));
}

eval::ScoreMatrix columns(const std::vector<std::vector<double>>& cols) {
  eval::ScoreMatrix m;
  m.rows = cols[0].size();
  m.cols = cols.size();
  for (std::size_t r = 0; r < m.rows; ++r)
    for (const auto& c : cols) m.values.push_back(c[r]);
  return m;
}

double fused_eer(const eval::FusionModel& model, const eval::ScoreMatrix& m, const std::vector<int>& labels) {
  const auto f = eval::apply_fusion(model, m);
  std::vector<double> g, i;
  for (std::size_t r = 0; r < f.size(); ++r) (labels[r] ? g : i).push_back(f[r]);
  return eval::eer(eval::compute_det(g, i));
}

}  // namespace

TEST_CASE("trial counts for the reference protocol") {
  const auto trials = eval::build_trials(eval::synthetic_classes(418, 5));
  CHECK(eval::count_label(trials, Label::kGenuine) == 4180);
  CHECK(eval::count_label(trials, Label::kImpostor) == 174306);

  const auto small = eval::build_trials(eval::synthetic_classes(2, 2));
  CHECK(eval::count_label(small, Label::kGenuine) == 2);
  CHECK(eval::count_label(small, Label::kImpostor) == 2);

  const auto desk = eval::build_trials(eval::synthetic_classes(40, 5));
  CHECK(eval::count_label(desk, Label::kGenuine) == 400);
  CHECK(eval::count_label(desk, Label::kImpostor) == 1560);
}

TEST_CASE("trial counts obey the closed forms") {
  for (int u = 2; u <= 9; ++u)
    for (int t = 2; t <= 7; ++t) {
      const auto trials = eval::build_trials(eval::synthetic_classes(u, t));
      CHECK(eval::count_label(trials, Label::kGenuine) == static_cast<std::size_t>(u * t * (t - 1) / 2));
      CHECK(eval::count_label(trials, Label::kImpostor) == static_cast<std::size_t>(u * (u - 1)));
    }
}

TEST_CASE("trials pair the right classes without symmetric duplicates") {
  auto classes = eval::synthetic_classes(6, 4);
  // Intra-spectral: the same images on both sides.
  for (auto& c : classes) c.gallery = c.probe;
  const auto trials = eval::build_trials(classes);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : trials) {
    const auto cls = [](const std::string& id) { return id.substr(0, id.find('_')); };
    CHECK((cls(t.probe) == cls(t.gallery)) == (t.label == Label::kGenuine));
    CHECK(t.probe != t.gallery);
    CHECK(seen.insert({t.probe, t.gallery}).second);
    if (t.label == Label::kGenuine) CHECK(!seen.count({t.gallery, t.probe}));
  }
  for (const auto& t : trials)
    if (t.label == Label::kImpostor) {
      CHECK(t.probe.substr(t.probe.size() - 3) == "_p0");
      CHECK(t.gallery.substr(t.gallery.size() - 3) == "_p1");
    }
}

TEST_CASE("classes with fewer than two test images are skipped") {
  auto classes = eval::synthetic_classes(4, 3);
  classes[2].probe.resize(1);
  classes[2].gallery.resize(1);
  std::vector<std::string> warnings;
  const auto trials = eval::build_trials(classes, {}, &warnings);
  CHECK(warnings.size() == 1);
  CHECK(eval::count_label(trials, Label::kGenuine) == 9);
  CHECK(eval::count_label(trials, Label::kImpostor) == 6);
}

TEST_CASE("manifest round trip and trials from a split") {
  eval::DatasetSplit split;
  for (int c = 0; c < 3; ++c)
    for (auto s : {img::Spectrum::kNIR, img::Spectrum::kVIS})
      for (int k = 0; k < 5; ++k)
        split.entries.push_back({c, s, eval::image_id(c, s, k) + ".png", k < 3 ? eval::Role::kTrain : eval::Role::kTest, k});
  split.validate();
  const auto path = std::filesystem::temp_directory_path() / "xspec_manifest.txt";
  eval::save_manifest(path, split);
  const auto back = eval::load_manifest(path);
  CHECK(eval::encode_manifest(back) == eval::encode_manifest(split));

  const auto trials = eval::build_trials(back, img::Spectrum::kNIR, img::Spectrum::kVIS);
  REQUIRE(trials.size() == 3 + 6);
  CHECK(trials[0].probe == "id0_NIR_3");
  CHECK(trials[0].gallery == "id0_VIS_4");

  auto bad = split;
  bad.entries.push_back(bad.entries.front());
  CHECK_THROWS(bad.validate());
  CHECK_THROWS(eval::decode_manifest("0 NIR a.png train\n"));
}

TEST_CASE("DET of perfectly separated scores") {
  const std::vector<double> g{0.9, 0.8}, i{0.1, 0.2};
  const auto curve = eval::compute_det(g, i);
  CHECK(curve.points.front().far == 1.0);
  CHECK(curve.points.front().frr == 0.0);
  CHECK(curve.points.back().far == 0.0);
  CHECK(curve.points.back().frr == 1.0);
  CHECK(eval::eer(curve) == 0.0);
  for (double target : {0.5, 0.01, 0.001}) CHECK(eval::gar_at_far(curve, target).gar == 1.0);
  CHECK_THROWS_AS(eval::compute_det(g, std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(eval::gar_at_far(curve, 0.0), std::invalid_argument);
}

TEST_CASE("DET of identical distributions") {
  std::vector<double> s;
  for (int k = 0; k < 1000; ++k) s.push_back(k * 0.001);
  const auto curve = eval::compute_det(s, s);
  CHECK(eval::eer(curve) == doctest::Approx(0.5).epsilon(1e-12));
  const auto g = eval::gar_at_far(curve, 0.01);
  CHECK(g.gar == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(g.far <= 0.01);
}

TEST_CASE("DET, EER and GAR agree with the exhaustive sweep") {
  Rng rng(2024);
  for (int set = 0; set < 50; ++set) {
    const int ng = 1 + static_cast<int>(rng.below(200)), ni = 1 + static_cast<int>(rng.below(200));
    const double quant = set % 2 ? 10.0 : 1e6;  // odd sets carry heavy ties
    std::vector<double> g, i;
    for (int k = 0; k < ng; ++k) g.push_back(std::round(rng.normal(0.8, 0.5) * quant) / quant);
    for (int k = 0; k < ni; ++k) i.push_back(std::round(rng.normal(0.0, 0.5) * quant) / quant);
    const auto curve = eval::compute_det(g, i);
    const auto oracle = test::sweep(g, i);
    REQUIRE(curve.points.size() == oracle.size());
    for (std::size_t k = 0; k < oracle.size(); ++k) {
      CHECK(curve.points[k].threshold == oracle[k].threshold);
      CHECK(curve.points[k].far == oracle[k].far);
      CHECK(curve.points[k].frr == oracle[k].frr);
      if (k) {
        CHECK(curve.points[k].far <= curve.points[k - 1].far);
        CHECK(curve.points[k].frr >= curve.points[k - 1].frr);
      }
    }
    CHECK(std::abs(eval::eer(curve) - test::sweep_eer(oracle)) <= 1e-12);
    for (double target : {0.01, 0.001, 0.1})
      CHECK(std::abs(eval::gar_at_far(curve, target).gar - test::sweep_gar(oracle, target)) <= 1e-12);
  }
}

TEST_CASE("two-Gaussian EER and GAR match the sweep") {
  Rng rng(99);
  std::vector<double> g, i;
  gaussian_scores(rng, 1000, 1.0, 0.5, g);
  gaussian_scores(rng, 1000, 0.0, 0.5, i);
  const auto curve = eval::compute_det(g, i);
  const auto oracle = test::sweep(g, i);
  const double e = eval::eer(curve);
  CHECK(std::abs(e - test::sweep_eer(oracle)) <= 1e-12);
  CHECK(e == doctest::Approx(0.1587).epsilon(0.2));
  CHECK(eval::gar_at_far(curve, 0.01).gar == test::sweep_gar(oracle, 0.01));
}

TEST_CASE("fusion on one informative comparator keeps the polarity") {
  Rng rng(1);
  std::vector<double> s;
  std::vector<int> labels;
  for (int k = 0; k < 400; ++k) {
    const bool gen = k % 4 == 0;
    s.push_back(rng.normal(gen ? 1.0 : 0.0, 0.5));
    labels.push_back(gen);
  }
  const auto model = eval::train_fusion(columns({s}), labels);
  CHECK(model.weights[0] > 0);
  CHECK(model.gradient_norm < 1e-8);
}

TEST_CASE("duplicated comparators receive equal weights") {
  Rng rng(2);
  std::vector<double> s;
  std::vector<int> labels;
  for (int k = 0; k < 300; ++k) {
    labels.push_back(k % 3 == 0);
    s.push_back(rng.normal(labels.back() ? 1.0 : 0.0, 0.7));
  }
  const auto model = eval::train_fusion(columns({s, s}), labels);
  CHECK(std::abs(model.weights[0] - model.weights[1]) < 1e-6);
}

TEST_CASE("separable data still terminates") {
  std::vector<double> s{0, 1, 2, 10, 11, 12};
  std::vector<int> labels{0, 0, 0, 1, 1, 1};
  eval::FusionConfig cfg;
  cfg.max_iterations = 2000;
  const auto model = eval::train_fusion(columns({s}), labels, cfg);
  CHECK(std::isfinite(model.weights[0]));
  CHECK(model.weights[0] > 0);
  CHECK_THROWS_AS(eval::train_fusion(columns({s}), std::vector<int>(6, 1)), std::invalid_argument);
}

TEST_CASE("fusion of two independent comparators beats both") {
  Rng rng(7);
  auto draw = [&](int n, std::vector<double>& a, std::vector<double>& b, std::vector<int>& labels) {
    for (int k = 0; k < n; ++k) {
      const bool gen = k % 2 == 0;
      a.push_back(rng.normal(gen ? 1.0 : 0.0, 0.5));
      b.push_back(rng.normal(gen ? 1.0 : 0.0, 0.5));
      labels.push_back(gen);
    }
  };
  std::vector<double> ta, tb, ha, hb;
  std::vector<int> tl, hl;
  draw(10000, ta, tb, tl);
  draw(10000, ha, hb, hl);
  const auto model = eval::train_fusion(columns({ta, tb}), tl);
  const double fused = fused_eer(model, columns({ha, hb}), hl);
  for (const auto* col : {&ha, &hb}) {
    std::vector<double> g, i;
    for (std::size_t r = 0; r < col->size(); ++r) (hl[r] ? g : i).push_back((*col)[r]);
    const double single = eval::eer(eval::compute_det(g, i));
    CHECK(single == doctest::Approx(0.16).epsilon(0.15));
    CHECK(fused < single);
  }
}

TEST_CASE("apply_fusion is the affine map") {
  eval::FusionModel zero{0.25, {0.0, 0.0}, {0, 0}, {1, 1}};
  const auto m = columns({{1, 2, 3}, {4, 5, 6}});
  for (double v : eval::apply_fusion(zero, m)) CHECK(v == 0.25);

  eval::FusionModel ident{0.0, {1.0}, {0.0}, {1.0}};
  const auto one = columns({{0.3, -2.0, 7.5}});
  CHECK(eval::apply_fusion(ident, one) == std::vector<double>{0.3, -2.0, 7.5});

  eval::FusionModel first{0.0, {1.0, 0.0}, {0.5, 0.5}, {2.0, 2.0}};
  const auto fused = eval::apply_fusion(first, m);
  CHECK(fused[0] < fused[1]);
  CHECK(fused[1] < fused[2]);
  CHECK_THROWS_AS(eval::apply_fusion(ident, m), std::invalid_argument);
}

TEST_CASE("fused ranking ignores per-comparator affine rescaling") {
  Rng rng(5);
  std::vector<double> a, b, a2, b2;
  std::vector<int> labels;
  for (int k = 0; k < 500; ++k) {
    labels.push_back(k % 5 == 0);
    a.push_back(rng.normal(labels.back(), 0.6));
    b.push_back(rng.normal(labels.back(), 0.9));
    a2.push_back(3.0 * a.back() - 7.0);
    b2.push_back(0.5 * b.back() + 100.0);
  }
  const auto f1 = eval::apply_fusion(eval::train_fusion(columns({a, b}), labels), columns({a, b}));
  const auto f2 = eval::apply_fusion(eval::train_fusion(columns({a2, b2}), labels), columns({a2, b2}));
  for (std::size_t i = 0; i + 1 < f1.size(); ++i)
    if (std::abs(f1[i] - f1[i + 1]) > 1e-9) CHECK((f1[i] < f1[i + 1]) == (f2[i] < f2[i + 1]));
}

TEST_CASE("fusion model text round trip") {
  eval::FusionModel m{-0.5, {1.25, 3e-7}, {0.1, 0.2}, {1.5, 2.5}, 1e-4, 42, 1e-9};
  const auto back = eval::decode_fusion(eval::encode_fusion(m));
  CHECK(back.bias == m.bias);
  CHECK(back.weights == m.weights);
  CHECK(back.stddev == m.stddev);
  CHECK(back.iterations == 42);
  CHECK_THROWS(eval::decode_fusion("bias=1\n"));
}

TEST_CASE("reports") {
  const std::vector<double> g{0.9, 0.8}, i{0.1, 0.2};
  const auto row = eval::evaluate("NIR-VIS", "LBP", g, i);
  CHECK(row.eer == 0.0);
  const auto text = eval::summary_text({row});
  CHECK(text.find("NIR-VIS") != std::string::npos);
  CHECK(text.find("0.000") != std::string::npos);
  const auto csv = eval::det_csv(eval::compute_det(g, i));
  CHECK(csv.rfind("threshold,far,frr\n-inf,1,0\n", 0) == 0);
  CHECK(csv.find("inf,0,1\n") != std::string::npos);
  const auto svg = eval::svg_det_plot("DET", {{"LBP", eval::compute_det(g, i)}});
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.rfind("</svg>\n") == svg.size() - 7);
  const auto lines = eval::svg_line_plot("loss", "epoch", "L1", {{"val", {{1, 0.5}, {2, 0.25}}}});
  CHECK(lines.find("<polyline") != std::string::npos);
}
