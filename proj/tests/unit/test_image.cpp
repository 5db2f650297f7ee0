#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "support/images.hpp"
#include "xspec/image/image.hpp"
#include "xspec/image/image_io.hpp"

using namespace xspec;
using img::SpectralImage;

namespace {

double keys(double t) {
  t = std::abs(t);
  if (t <= 1) return 1.5 * t * t * t - 2.5 * t * t + 1;
  if (t < 2) return -0.5 * t * t * t + 2.5 * t * t - 4 * t + 2;
  return 0;
}

// Direct 4x4 evaluation of the bicubic kernel at each target pixel.
double bicubic_oracle(const SpectralImage& im, int h, int w, int y, int x) {
  const double sy = (y + 0.5) * im.height / h - 0.5;
  const double sx = (x + 0.5) * im.width / w - 0.5;
  const int by = static_cast<int>(std::floor(sy)), bx = static_cast<int>(std::floor(sx));
  double acc = 0;
  for (int i = by - 1; i <= by + 2; ++i)
    for (int j = bx - 1; j <= bx + 2; ++j) {
      const int yy = std::min(std::max(i, 0), im.height - 1);
      const int xx = std::min(std::max(j, 0), im.width - 1);
      acc += keys(sy - i) * keys(sx - j) * im.at(yy, xx);
    }
  return acc;
}

std::filesystem::path temp_dir(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("resize to the same size is the identity") {
  const auto im = test::blob_image(40, 3);
  const auto out = img::resize_bicubic(im, 40, 40);
  for (std::size_t i = 0; i < im.pixels.size(); ++i) CHECK(std::abs(out.pixels[i] - im.pixels[i]) < 1e-6);
}

TEST_CASE("resize keeps a constant image constant") {
  SpectralImage im(30, 50, 3, 0.37f);
  const auto out = img::resize_bicubic(im, 17, 64);
  for (float v : out.pixels) CHECK(v == doctest::Approx(0.37).epsilon(1e-6));
}

TEST_CASE("resize 640x480 to 256x256") {
  SpectralImage im(480, 640, 1, 0.2f);
  const auto out = img::resize_bicubic(im, 256, 256);
  CHECK(out.height == 256);
  CHECK(out.width == 256);
  CHECK_THROWS_AS(img::resize_bicubic(im, 3, 10), std::invalid_argument);
}

TEST_CASE("resize matches a direct 2-d kernel evaluation") {
  const auto im = test::blob_image(23, 9);
  for (auto [h, w] : {std::pair{64, 64}, std::pair{11, 37}, std::pair{23, 8}}) {
    const auto out = img::resize_bicubic(im, h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) CHECK(out.at(y, x) == doctest::Approx(bicubic_oracle(im, h, w, y, x)).epsilon(1e-5));
  }
}

TEST_CASE("grayscale luma") {
  SpectralImage rgb(1, 3, 3);
  rgb.at(0, 0, 0) = rgb.at(0, 0, 1) = rgb.at(0, 0, 2) = 0.6f;
  rgb.at(0, 1, 0) = 1.f;
  rgb.at(0, 2, 2) = 1.f;
  const auto g = img::to_grayscale(rgb);
  CHECK(g.channels == 1);
  CHECK(g.at(0, 0) == doctest::Approx(0.6));
  CHECK(g.at(0, 1) == doctest::Approx(0.299));
  CHECK(g.at(0, 2) == doctest::Approx(0.114));

  const auto gray = test::blob_image(8, 1);
  CHECK(img::to_grayscale(gray).pixels == gray.pixels);
}

TEST_CASE("model-space round trip and tags") {
  auto im = test::blob_image(16, 2);
  im.spectrum = img::Spectrum::kNIR;
  im.identity = 12;
  const auto t = img::to_model_tensor(im);
  CHECK(t.shape() == nn::Shape{1, 1, 16, 16});
  for (float v : t.storage()) CHECK((v >= -1.f && v <= 1.f));
  const auto back = img::from_model_tensor(t, im);
  CHECK(back.identity == 12);
  CHECK(img::mean_abs_difference(back, im) < 1e-7);
  CHECK(img::translated_tag(img::Spectrum::kVIS) == img::Spectrum::kNIRSynth);
  CHECK(img::parse_spectrum(img::spectrum_name(img::Spectrum::kVISSynth)) == img::Spectrum::kVISSynth);
}

TEST_CASE("PNG and PGM round trip at 8-bit precision") {
  const auto dir = temp_dir("xspec_image_io");
  SpectralImage rgb(7, 5, 3);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) rgb.pixels[i] = static_cast<float>((i * 37) % 256) / 255.f;
  img::write_image(dir / "a.png", rgb);
  const auto back = img::read_image(dir / "a.png");
  CHECK(back.channels == 3);
  CHECK(back.pixels == rgb.pixels);

  const auto gray = test::blob_image(9, 4);
  img::write_image(dir / "g.png", gray);
  img::write_image(dir / "g.pgm", gray);
  const auto a = img::read_image(dir / "g.png");
  const auto b = img::read_image(dir / "g.pgm");
  CHECK(a.channels == 1);
  CHECK(a.pixels == b.pixels);
  CHECK(img::mean_abs_difference(a, gray) < 0.5 / 255 + 1e-7);

  CHECK_THROWS(img::read_image(dir / "missing.png"));
  CHECK_THROWS_AS(img::write_image(dir / "x.bmp", gray), std::invalid_argument);
}
