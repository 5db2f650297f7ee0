#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <set>

#include "xspec/eval/split.hpp"
#include "xspec/synth/synthdata.hpp"
#include "xspec/util/files.hpp"

using namespace xspec;
using namespace xspec::synth;

namespace {

std::vector<double> as_vector(const IdentityParams& p) {
  return {p.iris_radius,    p.iris_ellipticity, p.pupil_ratio,  p.melanin,
          p.eye_half_width, p.upper_lid,        p.lower_lid,    p.brow_offset,
          p.brow_curvature, p.brow_thickness,   p.eye_dx,       p.eye_dy,
          p.skin_tone[0],   p.skin_tone[1],     p.skin_tone[2], p.skin_texture};
}

std::vector<double> gradient_magnitude(const img::SpectralImage& image) {
  const img::SpectralImage g = img::to_grayscale(image);
  const int n = g.width;
  std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
  for (int y = 1; y < n - 1; ++y)
    for (int x = 1; x < n - 1; ++x) {
      const double gx = g.at(y, x + 1) - g.at(y, x - 1), gy = g.at(y + 1, x) - g.at(y - 1, x);
      out[static_cast<std::size_t>(y) * n + x] = std::hypot(gx, gy);
    }
  return out;
}

// Normalized cross-correlation of a and b shifted by (dy, dx) over the
// overlapping window.
double ncc(const std::vector<double>& a, const std::vector<double>& b, int n, int dy, int dx) {
  double sab = 0, saa = 0, sbb = 0;
  for (int y = 4; y < n - 4; ++y)
    for (int x = 4; x < n - 4; ++x) {
      const double va = a[static_cast<std::size_t>(y) * n + x];
      const double vb = b[static_cast<std::size_t>(y + dy) * n + x + dx];
      sab += va * vb;
      saa += va * va;
      sbb += vb * vb;
    }
  return sab / std::sqrt(saa * sbb);
}

std::vector<char> pupil_mask(const img::SpectralImage& image, const std::vector<std::uint8_t>& regions) {
  double pupil = 0, iris = 0;
  int np = 0, ni = 0;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    if (regions[k] == kPupil) pupil += image.pixels[k], ++np;
    if (regions[k] == kIris) iris += image.pixels[k], ++ni;
  }
  const double t = 0.5 * (pupil / np + iris / ni);
  std::vector<char> m(regions.size());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = regions[k] >= kSclera && image.pixels[k] < t;
  return m;
}

}  // namespace

TEST_CASE("identity parameters are deterministic, distinct and in range") {
  const auto a = as_vector(gen_identity(7, 3));
  CHECK(a == as_vector(gen_identity(7, 3)));
  CHECK(a != as_vector(gen_identity(8, 3)));
  CHECK_THROWS_AS(gen_identity(7, -1), std::invalid_argument);

  std::vector<std::vector<double>> all;
  for (int i = 0; i < 40; ++i) all.push_back(as_vector(gen_identity(7, i)));
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      int differ = 0;
      for (std::size_t k = 0; k < all[i].size(); ++k) differ += all[i][k] != all[j][k];
      CHECK(differ >= 3);
    }
  for (int i = 0; i < 500; ++i) {
    const IdentityParams p = gen_identity(7, i);
    CHECK(p.melanin >= 0.3);
    CHECK(p.melanin <= 0.9);
    CHECK(p.iris_radius >= 0.12);
    CHECK(p.iris_radius <= 0.17);
    CHECK(p.pupil_ratio >= 0.3);
    CHECK(p.pupil_ratio <= 0.5);
  }
}

TEST_CASE("zero-nuisance renders are reproducible") {
  RenderConfig rc;
  rc.nuisance = NuisanceConfig::none();
  const IdentityParams id = gen_identity(7, 5);
  const RenderedPair a = render_pair(id, 2, rc), b = render_pair(id, 2, rc);
  CHECK(a.pair.vis.pixels == b.pair.vis.pixels);
  CHECK(a.pair.nir.pixels == b.pair.nir.pixels);
  CHECK(a.pair.vis.channels == 3);
  CHECK(a.pair.nir.channels == 1);
  CHECK(a.pair.nir.spectrum == img::Spectrum::kNIR);
  CHECK(a.pair.vis.spectrum == img::Spectrum::kVIS);
  CHECK(a.regions.size() == 64u * 64u);
}

TEST_CASE("NIR and VIS members of a pair are pixel aligned") {
  const RenderConfig clean{64, 2, 7, NuisanceConfig::none()};
  const RenderConfig noisy;
  for (int c = 0; c < 6; ++c) {
    CAPTURE(c);
    const RenderedPair r = render_pair(gen_identity(7, c), c, clean);
    const img::SpectralImage vis = img::to_grayscale(r.pair.vis);
    const auto mv = pupil_mask(vis, r.regions), mn = pupil_mask(r.pair.nir, r.regions);
    int inter = 0, uni = 0;
    for (std::size_t k = 0; k < mv.size(); ++k) {
      inter += mv[k] && mn[k];
      uni += mv[k] || mn[k];
    }
    REQUIRE(uni > 0);
    CHECK(static_cast<double>(inter) / uni > 0.8);

    for (const RenderConfig* rc : {&clean, &noisy}) {
      const RenderedPair p = render_pair(gen_identity(7, c), c, *rc);
      const auto gv = gradient_magnitude(p.pair.vis), gn = gradient_magnitude(p.pair.nir);
      const double centre = ncc(gv, gn, 64, 0, 0);
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx)
          if (dy != 0 || dx != 0) CHECK(ncc(gv, gn, 64, dy, dx) < centre);
    }
  }
}

TEST_CASE("same-identity captures are closer than different identities") {
  const RenderConfig rc;
  std::vector<std::vector<img::SpectralImage>> images(10);
  for (int c = 0; c < 10; ++c)
    for (int k = 0; k < 5; ++k) images[c].push_back(render_pair(gen_identity(7, c), k, rc).pair.vis);
  double intra = 0, inter = 0;
  int n_intra = 0, n_inter = 0;
  for (int c = 0; c < 10; ++c)
    for (int k = 0; k < 5; ++k)
      for (int d = c; d < 10; ++d)
        for (int l = d == c ? k + 1 : 0; l < 5; ++l) {
          const double v = img::mean_abs_difference(images[c][k], images[d][l]);
          if (c == d) intra += v, ++n_intra;
          else inter += v, ++n_inter;
        }
  CHECK(n_intra == 100);
  CHECK(n_inter == 1125);
  CHECK(intra / n_intra < inter / n_inter);
}

TEST_CASE("dataset writer") {
  const auto dir = std::filesystem::temp_directory_path() / "xspec_test_synth";
  std::filesystem::remove_all(dir);
  DatasetConfig c;
  c.identities = 3;
  c.captures = 5;
  c.train = 3;
  c.test = 2;
  const eval::DatasetSplit split = gen_dataset(c, dir);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "images")) files += e.is_regular_file();
  CHECK(files == 3u * 5u * 2u);
  CHECK(split.entries.size() == files);
  CHECK(read_lines(dir / "manifest.txt").size() >= files);
  split.validate();
  CHECK(split.select(0, eval::Role::kTrain, img::Spectrum::kNIR).size() == 3);
  CHECK(split.select(2, eval::Role::kTest, img::Spectrum::kVIS).size() == 2);

  const std::string before = read_file(dir / "images" / "id1_VIS_4.png");
  const std::string manifest = read_file(dir / "manifest.txt");
  gen_dataset(c, dir);
  CHECK(read_file(dir / "images" / "id1_VIS_4.png") == before);
  CHECK(read_file(dir / "manifest.txt") == manifest);

  c.captures = 4;
  CHECK_THROWS_AS(gen_dataset(c, dir), std::invalid_argument);
  std::filesystem::remove_all(dir);

}

TEST_CASE("default dataset has 40 x 15 x 2 images") {
  const auto dir = std::filesystem::temp_directory_path() / "xspec_test_synth_default";
  std::filesystem::remove_all(dir);
  const eval::DatasetSplit split = gen_dataset(DatasetConfig{}, dir);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "images")) files += e.is_regular_file();
  CHECK(files == 1200);
  CHECK(split.entries.size() == 1200);
  CHECK(split.class_ids().size() == 40);
  std::filesystem::remove_all(dir);
}
