#include "xspec/eval/det.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace xspec::eval {

DetCurve compute_det(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty())
    throw std::invalid_argument("compute_det: need at least one genuine and one impostor score");
  std::vector<double> g(genuine.begin(), genuine.end()), im(impostor.begin(), impostor.end());
  for (double v : g)
    if (std::isnan(v)) throw std::invalid_argument("compute_det: NaN score");
  for (double v : im)
    if (std::isnan(v)) throw std::invalid_argument("compute_det: NaN score");
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thresholds;
  thresholds.reserve(g.size() + im.size());
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  DetCurve curve;
  curve.genuine_count = g.size();
  curve.impostor_count = im.size();
  const double ng = static_cast<double>(g.size()), ni = static_cast<double>(im.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  curve.points.push_back({-inf, 1.0, 0.0});
  std::size_t gi = 0, ii = 0;  // counts of scores strictly below the threshold
  for (double t : thresholds) {
    while (gi < g.size() && g[gi] < t) ++gi;
    while (ii < im.size() && im[ii] < t) ++ii;
    curve.points.push_back({t, static_cast<double>(im.size() - ii) / ni, static_cast<double>(gi) / ng});
  }
  curve.points.push_back({inf, 0.0, 1.0});
  return curve;
}

double eer(const DetCurve& curve) {
  const auto& p = curve.points;
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double d1 = p[i].far - p[i].frr;
    if (d1 > 0) continue;
    if (d1 == 0) return p[i].far;
    const double d0 = p[i - 1].far - p[i - 1].frr;
    const double alpha = d0 / (d0 - d1);
    return p[i - 1].far + alpha * (p[i].far - p[i - 1].far);
  }
  return 0.5;
}

GarAtFar gar_at_far(const DetCurve& curve, double far_target) {
  if (!(far_target > 0 && far_target < 1)) throw std::invalid_argument("gar_at_far: target must lie in (0, 1)");
  for (const auto& pt : curve.points)
    if (pt.far <= far_target) return {1.0 - pt.frr, pt.far, pt.threshold};
  const auto& last = curve.points.back();
  return {1.0 - last.frr, last.far, last.threshold};
}

}  // namespace xspec::eval
