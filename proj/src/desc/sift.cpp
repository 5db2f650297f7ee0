#include "xspec/desc/sift.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace xspec::desc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kOriBins = 36;
constexpr double kOriSigmaFactor = 1.5;
constexpr double kOriRadiusFactor = 3.0 * kOriSigmaFactor;
constexpr double kOriPeakRatio = 0.8;
constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescScaleFactor = 3.0;
constexpr double kDescMagThreshold = 0.2;
constexpr int kMaxInterpSteps = 5;
constexpr int kBorder = 1;

struct Plane {
  int h = 0;
  int w = 0;
  std::vector<float> v;

  Plane() = default;
  Plane(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_, 0.f) {}
  float& operator()(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  float operator()(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane gaussian_blur(const Plane& in, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double total = 0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& x : k) x /= total;

  Plane tmp(in.h, in.w), out(in.h, in.w);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * in(y, std::clamp(x + i, 0, in.w - 1));
      tmp(y, x) = static_cast<float>(acc);
    }
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x) {
      double acc = 0;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp(std::clamp(y + i, 0, in.h - 1), x);
      out(y, x) = static_cast<float>(acc);
    }
  return out;
}

Plane half_size(const Plane& in) {
  Plane out(in.h / 2, in.w / 2);
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      out(y, x) = 0.25f * (in(2 * y, 2 * x) + in(2 * y, 2 * x + 1) + in(2 * y + 1, 2 * x) + in(2 * y + 1, 2 * x + 1));
  return out;
}

struct Pyramid {
  std::vector<std::vector<Plane>> gauss;  // [octave][scales + 3]
  std::vector<std::vector<Plane>> dog;    // [octave][scales + 2]
};

Pyramid build_pyramid(const Plane& base_image, const SiftParams& p) {
  const int s = p.scales;
  const double k = std::pow(2.0, 1.0 / s);
  std::vector<double> step(static_cast<std::size_t>(s + 3));
  step[0] = std::sqrt(std::max(p.sigma * p.sigma - p.input_sigma * p.input_sigma, 0.01));
  for (int i = 1; i < s + 3; ++i) {
    const double prev = p.sigma * std::pow(k, i - 1);
    const double total = prev * k;
    step[i] = std::sqrt(total * total - prev * prev);
  }
  Pyramid pyr;
  for (int o = 0; o < p.octaves; ++o) {
    std::vector<Plane> layers;
    if (o == 0) {
      layers.push_back(gaussian_blur(base_image, step[0]));
    } else {
      const Plane& prev = pyr.gauss.back()[s];
      if (prev.h / 2 < 4 || prev.w / 2 < 4) break;
      layers.push_back(half_size(prev));
    }
    for (int i = 1; i < s + 3; ++i) layers.push_back(gaussian_blur(layers.back(), step[i]));
    std::vector<Plane> dogs;
    for (int i = 0; i + 1 < s + 3; ++i) {
      Plane d(layers[i].h, layers[i].w);
      for (std::size_t j = 0; j < d.v.size(); ++j) d.v[j] = layers[i + 1].v[j] - layers[i].v[j];
      dogs.push_back(std::move(d));
    }
    pyr.gauss.push_back(std::move(layers));
    pyr.dog.push_back(std::move(dogs));
  }
  return pyr;
}

bool is_extremum(const std::vector<Plane>& dog, int layer, int y, int x, float threshold) {
  const float v = dog[layer](y, x);
  if (std::abs(v) <= threshold) return false;
  const bool want_max = v > 0;
  for (int dl = -1; dl <= 1; ++dl)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dl == 0 && dy == 0 && dx == 0) continue;
        const float n = dog[layer + dl](y + dy, x + dx);
        if (want_max ? n >= v : n <= v) return false;
      }
  return true;
}

// Solves H x = b by Gaussian elimination with partial pivoting.
bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b, std::array<double, 3>& x) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-12) return false;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int j = c; j < 3; ++j) a[r][j] -= f * a[c][j];
      b[r] -= f * b[c];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double acc = b[r];
    for (int j = r + 1; j < 3; ++j) acc -= a[r][j] * x[j];
    x[r] = acc / a[r][r];
  }
  return true;
}

struct Extremum {
  int layer;
  int y;
  int x;
  double off_layer;
  double off_y;
  double off_x;
};

bool refine(const std::vector<Plane>& dog, const SiftParams& p, Extremum& e) {
  const int s = p.scales;
  const int h = dog[0].h, w = dog[0].w;
  std::array<double, 3> off{};
  std::array<double, 3> grad{};
  int step = 0;
  for (; step < kMaxInterpSteps; ++step) {
    const Plane& prev = dog[e.layer - 1];
    const Plane& cur = dog[e.layer];
    const Plane& next = dog[e.layer + 1];
    const int y = e.y, x = e.x;
    const double v2 = 2.0 * cur(y, x);
    grad = {0.5 * (cur(y, x + 1) - cur(y, x - 1)), 0.5 * (cur(y + 1, x) - cur(y - 1, x)),
            0.5 * (next(y, x) - prev(y, x))};
    const double dxx = cur(y, x + 1) + cur(y, x - 1) - v2;
    const double dyy = cur(y + 1, x) + cur(y - 1, x) - v2;
    const double dss = next(y, x) + prev(y, x) - v2;
    const double dxy = 0.25 * (cur(y + 1, x + 1) - cur(y + 1, x - 1) - cur(y - 1, x + 1) + cur(y - 1, x - 1));
    const double dxs = 0.25 * (next(y, x + 1) - next(y, x - 1) - prev(y, x + 1) + prev(y, x - 1));
    const double dys = 0.25 * (next(y + 1, x) - next(y - 1, x) - prev(y + 1, x) + prev(y - 1, x));
    std::array<std::array<double, 3>, 3> hess{{{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}}};
    std::array<double, 3> sol{};
    if (!solve3(hess, grad, sol)) return false;
    off = {-sol[0], -sol[1], -sol[2]};
    if (std::abs(off[0]) < 0.5 && std::abs(off[1]) < 0.5 && std::abs(off[2]) < 0.5) break;
    if (std::abs(off[0]) > 1e6 || std::abs(off[1]) > 1e6 || std::abs(off[2]) > 1e6) return false;
    e.x += static_cast<int>(std::lround(off[0]));
    e.y += static_cast<int>(std::lround(off[1]));
    e.layer += static_cast<int>(std::lround(off[2]));
    if (e.layer < 1 || e.layer > s || e.x < kBorder || e.x >= w - kBorder || e.y < kBorder || e.y >= h - kBorder)
      return false;
  }
  if (step >= kMaxInterpSteps) return false;

  const Plane& cur = dog[e.layer];
  const int y = e.y, x = e.x;
  const double contrast = cur(y, x) + 0.5 * (grad[0] * off[0] + grad[1] * off[1] + grad[2] * off[2]);
  if (std::abs(contrast) * s < p.contrast_threshold) return false;

  const double v2 = 2.0 * cur(y, x);
  const double dxx = cur(y, x + 1) + cur(y, x - 1) - v2;
  const double dyy = cur(y + 1, x) + cur(y - 1, x) - v2;
  const double dxy = 0.25 * (cur(y + 1, x + 1) - cur(y + 1, x - 1) - cur(y - 1, x + 1) + cur(y - 1, x - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double r = p.edge_ratio;
  if (det <= 0 || tr * tr * r >= (r + 1) * (r + 1) * det) return false;

  e.off_x = off[0];
  e.off_y = off[1];
  e.off_layer = off[2];
  return true;
}

bool gradient_at(const Plane& img, int y, int x, double& mag, double& angle) {
  if (y <= 0 || y >= img.h - 1 || x <= 0 || x >= img.w - 1) return false;
  const double dx = img(y, x + 1) - img(y, x - 1);
  const double dy = img(y + 1, x) - img(y - 1, x);
  mag = std::sqrt(dx * dx + dy * dy);
  angle = std::atan2(dy, dx);
  if (angle < 0) angle += kTwoPi;
  return true;
}

std::vector<double> dominant_orientations(const Plane& img, int y, int x, double scale) {
  const int radius = static_cast<int>(std::lround(kOriRadiusFactor * scale));
  const double sigma = kOriSigmaFactor * scale;
  std::array<double, kOriBins> raw{};
  for (int i = -radius; i <= radius; ++i)
    for (int j = -radius; j <= radius; ++j) {
      double mag, angle;
      if (!gradient_at(img, y + i, x + j, mag, angle)) continue;
      const double weight = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
      int bin = static_cast<int>(std::lround(kOriBins * angle / kTwoPi));
      bin = ((bin % kOriBins) + kOriBins) % kOriBins;
      raw[bin] += weight * mag;
    }
  std::array<double, kOriBins> hist{};
  for (int i = 0; i < kOriBins; ++i) {
    auto at = [&](int k) { return raw[((i + k) % kOriBins + kOriBins) % kOriBins]; };
    hist[i] = (at(-2) + at(2)) / 16.0 + (at(-1) + at(1)) * 4.0 / 16.0 + at(0) * 6.0 / 16.0;
  }
  const double peak = *std::max_element(hist.begin(), hist.end());
  std::vector<double> out;
  if (peak <= 0) return out;
  for (int i = 0; i < kOriBins; ++i) {
    const double l = hist[(i + kOriBins - 1) % kOriBins];
    const double r = hist[(i + 1) % kOriBins];
    if (hist[i] > l && hist[i] > r && hist[i] >= kOriPeakRatio * peak) {
      double bin = i + 0.5 * (l - r) / (l - 2 * hist[i] + r);
      if (bin < 0) bin += kOriBins;
      if (bin >= kOriBins) bin -= kOriBins;
      out.push_back(kTwoPi * bin / kOriBins);
    }
  }
  return out;
}

std::array<float, 128> describe(const Plane& img, double px, double py, double orientation, double scale) {
  constexpr int d = kDescWidth, n = kDescBins;
  const double hist_width = kDescScaleFactor * scale;
  int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (d + 1) * 0.5));
  radius = std::min(radius, static_cast<int>(std::sqrt(static_cast<double>(img.h) * img.h + img.w * img.w)));
  const double cos_t = std::cos(orientation) / hist_width;
  const double sin_t = std::sin(orientation) / hist_width;
  const double bins_per_rad = n / kTwoPi;
  const double exp_scale = -1.0 / (d * d * 0.5);
  const int cx = static_cast<int>(std::lround(px));
  const int cy = static_cast<int>(std::lround(py));

  std::vector<double> hist(static_cast<std::size_t>((d + 2) * (d + 2) * (n + 2)), 0.0);
  auto cell = [&](int r, int c, int o) -> double& {
    return hist[(static_cast<std::size_t>(r) * (d + 2) + c) * (n + 2) + o];
  };
  for (int i = -radius; i <= radius; ++i)
    for (int j = -radius; j <= radius; ++j) {
      // Offset expressed in the keypoint frame, in histogram-cell units.
      const double c_rot = j * cos_t + i * sin_t;
      const double r_rot = -j * sin_t + i * cos_t;
      const double rbin = r_rot + d / 2.0 - 0.5;
      const double cbin = c_rot + d / 2.0 - 0.5;
      if (rbin <= -1 || rbin >= d || cbin <= -1 || cbin >= d) continue;
      double mag, angle;
      if (!gradient_at(img, cy + i, cx + j, mag, angle)) continue;
      double rel = angle - orientation;
      while (rel < 0) rel += kTwoPi;
      while (rel >= kTwoPi) rel -= kTwoPi;
      const double obin = rel * bins_per_rad;
      const double weight = mag * std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double dr = rbin - r0, dc = cbin - c0, dob = obin - o0;
      if (o0 >= n) o0 -= n;
      for (int a = 0; a < 2; ++a) {
        const double wr = weight * (a ? dr : 1 - dr);
        for (int b = 0; b < 2; ++b) {
          const double wc = wr * (b ? dc : 1 - dc);
          cell(r0 + 1 + a, c0 + 1 + b, o0) += wc * (1 - dob);
          cell(r0 + 1 + a, c0 + 1 + b, o0 + 1) += wc * dob;
        }
      }
    }

  std::array<double, 128> v{};
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) {
      cell(r + 1, c + 1, 0) += cell(r + 1, c + 1, n);
      for (int o = 0; o < n; ++o) v[(r * d + c) * n + o] = cell(r + 1, c + 1, o);
    }
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  std::array<float, 128> out{};
  if (norm <= 0) return out;
  double norm2 = 0;
  for (double& x : v) {
    x = std::min(x / norm, kDescMagThreshold);
    norm2 += x * x;
  }
  norm2 = std::sqrt(norm2);
  for (int i = 0; i < 128; ++i) out[i] = static_cast<float>(v[i] / norm2);
  return out;
}

}  // namespace

KeypointSet sift_keypoints(const img::SpectralImage& image, const SiftParams& p) {
  if (image.channels != 1) throw std::invalid_argument("sift: grayscale input required");
  if (std::min(image.height, image.width) < 32) throw std::invalid_argument("sift: minimum image dimension is 32");
  if (p.octaves < 1 || p.scales < 1) throw std::invalid_argument("sift: octaves and scales must be positive");

  Plane base(image.height, image.width);
  base.v.assign(image.pixels.begin(), image.pixels.end());
  const Pyramid pyr = build_pyramid(base, p);
  const int s = p.scales;
  const float threshold = static_cast<float>(0.5 * p.contrast_threshold / s);

  KeypointSet out;
  for (std::size_t o = 0; o < pyr.dog.size(); ++o) {
    const auto& dog = pyr.dog[o];
    const int h = dog[0].h, w = dog[0].w;
    const double factor = std::ldexp(1.0, static_cast<int>(o));
    for (int layer = 1; layer <= s; ++layer)
      for (int y = kBorder; y < h - kBorder; ++y)
        for (int x = kBorder; x < w - kBorder; ++x) {
          if (!is_extremum(dog, layer, y, x, threshold)) continue;
          Extremum e{layer, y, x, 0, 0, 0};
          if (!refine(dog, p, e)) continue;
          const double octave_scale = p.sigma * std::pow(2.0, (e.layer + e.off_layer) / s);
          const double ox = e.x + e.off_x, oy = e.y + e.off_y;
          const Plane& g = pyr.gauss[o][e.layer];
          for (double ori : dominant_orientations(g, e.y, e.x, octave_scale)) {
            Keypoint kp;
            kp.x = static_cast<float>((ox + 0.5) * factor - 0.5);
            kp.y = static_cast<float>((oy + 0.5) * factor - 0.5);
            kp.scale = static_cast<float>(octave_scale * factor);
            kp.orientation = static_cast<float>(ori);
            kp.descriptor = describe(g, ox, oy, ori, octave_scale);
            kp.x = std::clamp(kp.x, 0.f, static_cast<float>(image.width - 1));
            kp.y = std::clamp(kp.y, 0.f, static_cast<float>(image.height - 1));
            out.push_back(kp);
          }
        }
  }

  // Identical descriptors would make every ratio test between them fail.
  KeypointSet unique;
  for (const auto& kp : out) {
    const bool dup = std::any_of(unique.begin(), unique.end(),
                                 [&](const Keypoint& u) { return u.descriptor == kp.descriptor; });
    if (!dup) unique.push_back(kp);
  }
  return unique;
}

}  // namespace xspec::desc
