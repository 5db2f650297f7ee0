#include "xspec/synth/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "xspec/image/image_io.hpp"
#include "xspec/util/rng.hpp"

namespace xspec::synth {

namespace {

constexpr std::uint64_t kCaptureStream = 0x43415054ULL;
constexpr std::uint64_t kNoiseStream = 0x4e4f4953ULL;

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3 - 2 * t);
}

// Smooth random field: a coarse grid of N(0,1) values, bicubic upsampled.
std::vector<float> smooth_field(std::uint64_t seed, int grid, int size) {
  Rng rng(seed);
  img::SpectralImage coarse(grid, grid, 1);
  for (auto& v : coarse.pixels) v = static_cast<float>(rng.normal());
  return img::resize_bicubic(coarse, size, size).pixels;
}

std::vector<float> box_blur(const std::vector<float>& in, int size, int radius) {
  std::vector<float> tmp(in.size()), out(in.size());
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += in[static_cast<std::size_t>(y) * size + std::clamp(x + k, 0, size - 1)];
      tmp[static_cast<std::size_t>(y) * size + x] = static_cast<float>(acc / (2 * radius + 1));
    }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += tmp[static_cast<std::size_t>(std::clamp(y + k, 0, size - 1)) * size + x];
      out[static_cast<std::size_t>(y) * size + x] = static_cast<float>(acc / (2 * radius + 1));
    }
  return out;
}

// Per-capture physiological variation.
struct CaptureState {
  double pupil_scale;
  double gaze_dx;
  double gaze_dy;
  double openness;
  double shift_x;
  double shift_y;
  double gain;
};

CaptureState capture_state(const IdentityParams& id, std::uint64_t seed, int capture, const NuisanceConfig& n) {
  Rng rng(Rng::mix(Rng::mix(seed ^ kCaptureStream, static_cast<std::uint64_t>(id.index)),
                   static_cast<std::uint64_t>(capture)));
  CaptureState s;
  s.pupil_scale = rng.uniform(0.85, 1.15);
  s.gaze_dx = rng.uniform(-0.015, 0.015);
  s.gaze_dy = rng.uniform(-0.01, 0.01);
  s.openness = rng.uniform(0.9, 1.05);
  s.shift_x = rng.uniform(-n.max_shift_px, n.max_shift_px);
  s.shift_y = rng.uniform(-n.max_shift_px, n.max_shift_px);
  s.gain = rng.uniform(1.0 - n.max_gain, 1.0 + n.max_gain);
  return s;
}

}  // namespace

IdentityParams gen_identity(std::uint64_t dataset_seed, int index) {
  if (index < 0) throw std::invalid_argument("gen_identity: index must be non-negative");
  Rng rng(Rng::mix(dataset_seed, static_cast<std::uint64_t>(index)));
  IdentityParams p;
  p.index = index;
  p.iris_radius = rng.uniform(0.12, 0.17);
  p.iris_ellipticity = rng.uniform(0.85, 1.0);
  p.pupil_ratio = rng.uniform(0.30, 0.50);
  p.melanin = rng.uniform(0.3, 0.9);
  p.eye_half_width = rng.uniform(0.28, 0.38);
  p.upper_lid = rng.uniform(0.10, 0.16);
  p.lower_lid = rng.uniform(0.06, 0.11);
  p.brow_offset = rng.uniform(0.22, 0.32);
  p.brow_curvature = rng.uniform(0.2, 1.2);
  p.brow_thickness = rng.uniform(0.035, 0.07);
  p.eye_dx = rng.uniform(-0.05, 0.05);
  p.eye_dy = rng.uniform(-0.05, 0.05);
  const double tone = rng.uniform(0.45, 0.85);
  p.skin_tone = {tone, tone * rng.uniform(0.72, 0.85), tone * rng.uniform(0.55, 0.72)};
  p.skin_texture = rng.uniform(0.10, 0.22);
  p.texture_seed = rng.next_u64();
  p.iris_seed = rng.next_u64();
  return p;
}

RenderedPair render_pair(const IdentityParams& id, int capture_index, const RenderConfig& config) {
  if (config.size < 8 || config.supersample < 1) throw std::invalid_argument("render_pair: invalid size");
  const int n = config.size * config.supersample;
  const CaptureState cs = capture_state(id, config.seed, capture_index, config.nuisance);
  const bool mirrored = id.index % 2 == 1;

  // Identity textures live in the face frame, so they move with the shift.
  const int tex_pad = 4 * config.supersample;
  const int tex_n = n + 2 * tex_pad;
  const auto coarse = smooth_field(id.texture_seed, 10, tex_n);
  const auto fine = smooth_field(id.texture_seed ^ 0x5a5aULL, 28, tex_n);
  Rng iris_rng(id.iris_seed);
  std::array<double, 12> streak_phase{}, streak_amp{};
  for (int k = 0; k < 12; ++k) {
    streak_phase[k] = iris_rng.uniform(0, 2 * std::numbers::pi);
    streak_amp[k] = iris_rng.uniform(0.0, 1.0) / (1 + k);
  }

  const double blend = 1.5 / n;  // edge softness in normalized units
  std::vector<float> luma_skin(static_cast<std::size_t>(n) * n);
  std::vector<std::uint8_t> regions_hi(static_cast<std::size_t>(n) * n);
  std::vector<std::array<float, 3>> rgb(static_cast<std::size_t>(n) * n);
  std::vector<std::array<float, 5>> weights(static_cast<std::size_t>(n) * n);  // soft region coverage

  const double shift_x = cs.shift_x / config.size, shift_y = cs.shift_y / config.size;
  const double cx = 0.5 + id.eye_dx, cy = 0.55 + id.eye_dy;
  const double iris_x = cx + cs.gaze_dx, iris_y = cy + cs.gaze_dy;
  const double rx = id.iris_radius, ry = id.iris_radius * id.iris_ellipticity;
  const double pupil_r = id.pupil_ratio * id.iris_radius * cs.pupil_scale;
  const std::array<double, 3> iris_light{0.33, 0.48, 0.62}, iris_dark{0.30, 0.17, 0.08};

  for (int py = 0; py < n; ++py)
    for (int px = 0; px < n; ++px) {
      // Face-frame coordinates.
      double u = (px + 0.5) / n - shift_x;
      const double v = (py + 0.5) / n - shift_y;
      if (mirrored) u = 1.0 - u;
      const std::size_t i = static_cast<std::size_t>(py) * n + px;
      const int tx = std::clamp(static_cast<int>(std::lround(u * n - 0.5)) + tex_pad, 0, tex_n - 1);
      const int ty = std::clamp(static_cast<int>(std::lround(v * n - 0.5)) + tex_pad, 0, tex_n - 1);
      const std::size_t ti = static_cast<std::size_t>(ty) * tex_n + tx;
      const double texture = id.skin_texture * (0.6 * coarse[ti] + 0.5 * fine[ti]);

      // Eye opening between two lid parabolas.
      const double du = (u - cx) / id.eye_half_width;
      const double lid_shape = std::max(0.0, 1.0 - du * du);
      const double upper = cy - id.upper_lid * cs.openness * lid_shape;
      const double lower = cy + id.lower_lid * cs.openness * lid_shape;
      const double inside = smoothstep(-blend, blend, v - upper) * smoothstep(-blend, blend, lower - v) *
                            (std::abs(du) < 1.0 ? 1.0 : 0.0);

      const double ex = (u - iris_x) / rx, ey = (v - iris_y) / ry;
      const double iris_d = std::sqrt(ex * ex + ey * ey);
      const double iris_cov = inside * (1.0 - smoothstep(1.0 - blend / rx, 1.0 + blend / rx, iris_d));
      const double pr = std::hypot(u - iris_x, v - iris_y);
      const double pupil_cov = inside * (1.0 - smoothstep(pupil_r - blend, pupil_r + blend, pr));

      const double bu = u - cx;
      const double brow_y = cy - id.brow_offset + id.brow_curvature * bu * bu;
      const double brow_cov = (1.0 - smoothstep(id.brow_thickness * 0.5 - blend, id.brow_thickness * 0.5 + blend,
                                                std::abs(v - brow_y))) *
                              (1.0 - smoothstep(0.38, 0.42, std::abs(bu)));

      const double w_pupil = pupil_cov;
      const double w_iris = iris_cov - pupil_cov * (iris_cov > 0 ? 1.0 : 0.0);
      const double w_sclera = inside - iris_cov;
      const double w_skin_all = 1.0 - inside;
      const double w_brow = w_skin_all * brow_cov;
      const double w_skin = w_skin_all - w_brow;
      weights[i] = {static_cast<float>(w_skin), static_cast<float>(w_brow), static_cast<float>(w_sclera),
                    static_cast<float>(std::max(0.0, w_iris)), static_cast<float>(w_pupil)};

      const double angle = std::atan2(ey, ex);
      double streaks = 0;
      for (int k = 0; k < 12; ++k) streaks += streak_amp[k] * std::cos((k + 3) * angle + streak_phase[k]);
      const double iris_tex = 1.0 + 0.25 * streaks * std::min(1.0, iris_d) + 0.15 * (iris_d - 0.6);

      std::array<double, 3> c{};
      for (int ch = 0; ch < 3; ++ch) {
        const double skin = id.skin_tone[ch] * (1.0 + texture);
        const double brow = 0.18 * id.skin_tone[ch] * (1.0 + 0.6 * texture);
        const double sclera = 0.86 - 0.04 * ch + 0.05 * (1 - lid_shape);
        const double iris =
            ((1 - id.melanin) * iris_light[ch] + id.melanin * iris_dark[ch]) * iris_tex;
        const double pupil = 0.04;
        c[ch] = w_skin * skin + w_brow * brow + w_sclera * sclera + std::max(0.0, w_iris) * iris + w_pupil * pupil;
      }
      rgb[i] = {static_cast<float>(c[0]), static_cast<float>(c[1]), static_cast<float>(c[2])};
      luma_skin[i] = static_cast<float>(0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]);
      const auto& w = weights[i];
      regions_hi[i] = static_cast<std::uint8_t>(std::max_element(w.begin(), w.end()) - w.begin());
    }

  // Spectral transfer on the clean render: skin texture attenuated toward a
  // local mean, iris brightened in proportion to melanin, then a gamma shift.
  const auto local_mean = box_blur(luma_skin, n, 2 * config.supersample);
  std::vector<float> nir_hi(luma_skin.size());
  for (std::size_t i = 0; i < nir_hi.size(); ++i) {
    const auto& w = weights[i];
    const double l = luma_skin[i];
    const double skin_w = w[kSkin] + w[kBrow];
    const double flattened = local_mean[i] + 0.3 * (l - local_mean[i]);
    double value = skin_w * (0.1 + 0.85 * flattened) + (1 - skin_w) * l;
    value += w[kIris] * id.melanin * 0.55 * (0.9 - l);
    value -= w[kSclera] * 0.12;
    nir_hi[i] = static_cast<float>(std::pow(std::clamp(value, 0.0, 1.0), 0.7));
  }

  img::SpectralImage vis_hi(n, n, 3), nir_img_hi(n, n, 1);
  for (std::size_t i = 0; i < rgb.size(); ++i)
    for (int ch = 0; ch < 3; ++ch) vis_hi.pixels[i * 3 + ch] = rgb[i][ch];
  nir_img_hi.pixels = nir_hi;

  RenderedPair out;
  auto& vis = out.pair.vis;
  auto& nir = out.pair.nir;
  vis = img::resize_bicubic(vis_hi, config.size, config.size);
  nir = img::resize_bicubic(nir_img_hi, config.size, config.size);

  Rng noise(Rng::mix(Rng::mix(config.seed ^ kNoiseStream, static_cast<std::uint64_t>(id.index)),
                     static_cast<std::uint64_t>(capture_index)));
  for (auto* im : {&nir, &vis})
    for (auto& p : im->pixels) {
      const double noisy = cs.gain * p + config.nuisance.noise_sigma * noise.normal();
      p = static_cast<float>(std::clamp(noisy, 0.0, 1.0));
    }

  for (auto* im : {&nir, &vis}) {
    im->identity = id.index;
    im->eye = mirrored ? img::Eye::kRight : img::Eye::kLeft;
    im->capture_index = capture_index;
  }
  nir.spectrum = img::Spectrum::kNIR;
  vis.spectrum = img::Spectrum::kVIS;

  out.regions.resize(static_cast<std::size_t>(config.size) * config.size);
  for (int y = 0; y < config.size; ++y)
    for (int x = 0; x < config.size; ++x) {
      const int sy = y * config.supersample + config.supersample / 2;
      const int sx = x * config.supersample + config.supersample / 2;
      out.regions[static_cast<std::size_t>(y) * config.size + x] = regions_hi[static_cast<std::size_t>(sy) * n + sx];
    }
  return out;
}

eval::DatasetSplit gen_dataset(const DatasetConfig& config, const std::filesystem::path& out_dir) {
  if (config.identities < 1) throw std::invalid_argument("gen_dataset: need at least one identity");
  if (config.train < 0 || config.test < 0 || config.captures < config.train + config.test)
    throw std::invalid_argument("gen_dataset: captures must cover train + test");
  std::filesystem::create_directories(out_dir / "images");

  // Captures beyond train + test would not appear in the manifest, so only
  // the listed ones are rendered.
  const int per_class = config.train + config.test;
  const int total = config.identities * per_class;
  std::string error;
#pragma omp parallel for schedule(dynamic)
  for (int job = 0; job < total; ++job) {
    const int cls = job / per_class, cap = job % per_class;
    try {
      const auto id = gen_identity(config.render.seed, cls);
      const auto rendered = render_pair(id, cap, config.render);
      img::write_png(out_dir / "images" / (eval::image_id(cls, img::Spectrum::kNIR, cap) + ".png"),
                     rendered.pair.nir);
      img::write_png(out_dir / "images" / (eval::image_id(cls, img::Spectrum::kVIS, cap) + ".png"),
                     rendered.pair.vis);
    } catch (const std::exception& e) {
#pragma omp critical(xspec_synth_error)
      if (error.empty()) error = e.what();
    }
  }
  if (!error.empty()) throw std::runtime_error("gen_dataset: " + error);

  eval::DatasetSplit split;
  for (int cls = 0; cls < config.identities; ++cls)
    for (auto spectrum : {img::Spectrum::kNIR, img::Spectrum::kVIS})
      for (int cap = 0; cap < config.train + config.test; ++cap)
        split.entries.push_back({cls, spectrum, "images/" + eval::image_id(cls, spectrum, cap) + ".png",
                                 cap < config.train ? eval::Role::kTrain : eval::Role::kTest, cap});
  eval::save_manifest(out_dir / "manifest.txt", split);
  return split;
}

}  // namespace xspec::synth
