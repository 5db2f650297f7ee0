#pragma once

#include <algorithm>
#include <limits>
#include <vector>

// Exhaustive threshold sweep: every score value plus +-inf, each point
// counted directly over the full score lists.
namespace xspec::test {

struct SweepPoint {
  double threshold, far, frr;
};

inline std::vector<SweepPoint> sweep(const std::vector<double>& genuine, const std::vector<double>& impostor) {
  std::vector<double> t(genuine);
  t.insert(t.end(), impostor.begin(), impostor.end());
  t.push_back(-std::numeric_limits<double>::infinity());
  t.push_back(std::numeric_limits<double>::infinity());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  std::vector<SweepPoint> out;
  for (double th : t) {
    double fa = 0, fr = 0;
    for (double s : impostor) fa += s >= th;
    for (double s : genuine) fr += s < th;
    out.push_back({th, fa / impostor.size(), fr / genuine.size()});
  }
  return out;
}

inline double sweep_eer(const std::vector<SweepPoint>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double a = pts[i - 1].far - pts[i - 1].frr, b = pts[i].far - pts[i].frr;
    if (a > 0 && b <= 0) {
      if (b == 0) return pts[i].frr;
      const double w = a / (a - b);
      return (1 - w) * pts[i - 1].far + w * pts[i].far;
    }
  }
  return 0.5;
}

// Highest GAR over all thresholds meeting the FAR target.
inline double sweep_gar(const std::vector<SweepPoint>& pts, double target) {
  double best = 0;
  for (const auto& p : pts)
    if (p.far <= target) best = std::max(best, 1 - p.frr);
  return best;
}

}  // namespace xspec::test
