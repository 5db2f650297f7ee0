#pragma once

#include <span>
#include <vector>

namespace xspec::eval {

struct DetPoint {
  double threshold;
  double far;  // fraction of impostor scores >= threshold
  double frr;  // fraction of genuine scores < threshold
};

// Thresholds ascend from -inf through every distinct score to +inf, so FAR
// falls from 1 to 0 and FRR rises from 0 to 1.
struct DetCurve {
  std::vector<DetPoint> points;
  std::size_t genuine_count = 0;
  std::size_t impostor_count = 0;
};

// Scores in similarity polarity. Throws when either class is empty.
DetCurve compute_det(std::span<const double> genuine, std::span<const double> impostor);

// Linear interpolation between the two thresholds around the first sign
// change of FAR - FRR; an exact crossing returns its value directly.
double eer(const DetCurve& curve);

struct GarAtFar {
  double gar;
  double far;  // achieved
  double threshold;
};

// GAR at the smallest threshold whose FAR does not exceed the target, i.e.
// the operating point with the highest GAR subject to FAR <= target.
GarAtFar gar_at_far(const DetCurve& curve, double far_target);

}  // namespace xspec::eval
