#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "xspec/match/comparators.hpp"
#include "xspec/match/score_io.hpp"
#include "xspec/util/rng.hpp"

using namespace xspec;

namespace {

std::vector<double> random_vec(Rng& rng, int n, bool nonneg) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = nonneg ? rng.uniform() : rng.normal();
  return v;
}

desc::Keypoint basis_point(int axis) {
  desc::Keypoint kp;
  kp.descriptor[static_cast<std::size_t>(axis)] = 1.f;
  return kp;
}

}  // namespace

TEST_CASE("euclidean distance") {
  const std::vector<double> a{1, 0}, b{0, 1};
  CHECK(match::euclidean(a, a) == 0);
  CHECK(match::euclidean(a, b) == doctest::Approx(std::sqrt(2.0)));
  CHECK_THROWS_AS(match::euclidean(a, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("chi-square distance") {
  const std::vector<double> a{1, 0}, b{0, 1};
  CHECK(match::chi2(a, a) == 0);
  CHECK(match::chi2(a, b) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(match::chi2(std::vector<double>{-1, 0}, b), std::invalid_argument);

  Rng rng(5);
  const auto x = random_vec(rng, 50, true), y = random_vec(rng, 50, true);
  std::vector<double> x2(x), y2(y);
  for (auto& v : x2) v *= 2;
  for (auto& v : y2) v *= 2;
  double oracle = 0;
  for (std::size_t i = 0; i < x.size(); ++i) oracle += (x[i] - y[i]) * (x[i] - y[i]) / (x[i] + y[i]);
  CHECK(match::chi2(x2, y2) == doctest::Approx(2 * oracle).epsilon(1e-9));
}

TEST_CASE("cosine distance") {
  const std::vector<double> a{1, 2, 3}, b{-1, -2, -3}, c{2, -1, 0};
  CHECK(match::cosine(a, a) == doctest::Approx(0.0));
  CHECK(match::cosine(a, c) == doctest::Approx(1.0));
  CHECK(match::cosine(a, b) == doctest::Approx(2.0));
  CHECK_THROWS_AS(match::cosine(a, std::vector<double>{0, 0, 0}), std::invalid_argument);
}

TEST_CASE("distances are symmetric and vanish on the diagonal") {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng.below(40));
    const auto a = random_vec(rng, n, true), b = random_vec(rng, n, true);
    CHECK(match::euclidean(a, b) == match::euclidean(b, a));
    CHECK(match::chi2(a, b) == match::chi2(b, a));
    CHECK(match::cosine(a, b) == doctest::Approx(match::cosine(b, a)).epsilon(1e-14));
    CHECK(match::euclidean(a, a) == 0);
    CHECK(match::chi2(a, a) == 0);
    CHECK(std::abs(match::cosine(a, a)) < 1e-12);
  }
}

TEST_CASE("polarity canonicalization reverses distance order exactly") {
  match::Score near{0.3, match::Polarity::kDistance, "x"}, far{0.9, match::Polarity::kDistance, "x"};
  CHECK(match::canonical(near) > match::canonical(far));
  CHECK(match::canonical(match::Score{0.4, match::Polarity::kSimilarity, "s"}) == 0.4);
}

TEST_CASE("sift match score") {
  desc::KeypointSet a, b;
  // 10 shared axes; the remaining points sit on axes unique to one side and
  // fail the ratio test against equidistant alternatives.
  for (int i = 0; i < 10; ++i) {
    a.push_back(basis_point(i));
    b.push_back(basis_point(i));
  }
  for (int i = 0; i < 10; ++i) a.push_back(basis_point(20 + i));
  for (int i = 0; i < 20; ++i) b.push_back(basis_point(40 + i));
  REQUIRE(a.size() == 20);
  REQUIRE(b.size() == 30);
  CHECK(match::sift_pair_count(a, b) == 10);
  CHECK(match::sift_match_score(a, b).value == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(match::sift_match_score(a, b).value == match::sift_match_score(b, a).value);
  CHECK(match::sift_match_score(a, a).value == 1.0);
  CHECK(match::sift_match_score({}, b).value == 0.0);
  CHECK(match::sift_match_score(a, {}).value == 0.0);
}

TEST_CASE("sift match score stays within [0, 1]") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    desc::KeypointSet a(1 + rng.below(15)), b(1 + rng.below(15));
    for (auto* set : {&a, &b})
      for (auto& kp : *set)
        for (auto& v : kp.descriptor) v = static_cast<float>(rng.uniform());
    const double s = match::sift_match_score(a, b).value;
    CHECK((s >= 0.0 && s <= 1.0));
  }
}

TEST_CASE("score files round trip") {
  match::ScoreSet set{{"id1_NIR_10", "id1_VIS_11", "lbp", match::Label::kGenuine, -0.1234567890123},
                      {"id1_NIR_10", "id2_VIS_11", "lbp", match::Label::kImpostor, 1e-300}};
  const auto path = std::filesystem::temp_directory_path() / "xspec_scores.txt";
  match::save_scores(path, set);
  const auto back = match::load_scores(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].score == set[0].score);
  CHECK(back[1].score == set[1].score);
  CHECK(back[1].label == match::Label::kImpostor);
  CHECK(match::encode_scores(back) == match::encode_scores(set));
  CHECK_THROWS(match::decode_scores("a b c genuine\n"));
  CHECK_THROWS(match::decode_scores("a b c maybe 1\n"));
}
