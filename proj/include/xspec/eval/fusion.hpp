#pragma once

#include <string>
#include <vector>

namespace xspec::eval {

// Row-major trials x k score matrix.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

struct FusionConfig {
  double l2 = 1e-4;
  double tolerance = 1e-8;  // on the gradient norm
  int max_iterations = 10000;
};

// f(s) = w0 + sum_i w_i (s_i - mean_i) / std_i.
struct FusionModel {
  double bias = 0;
  std::vector<double> weights;
  std::vector<double> mean;
  std::vector<double> stddev;
  double l2 = 0;
  int iterations = 0;
  double gradient_norm = 0;
};

// Class-balanced L2-regularized logistic regression (bias unregularized) by
// gradient ascent from zero. Standardization statistics come from the
// training matrix.
FusionModel train_fusion(const ScoreMatrix& scores, const std::vector<int>& labels, const FusionConfig& config = {});

std::vector<double> apply_fusion(const FusionModel& model, const ScoreMatrix& scores);

// key=value text form.
std::string encode_fusion(const FusionModel& model);
FusionModel decode_fusion(const std::string& text);

}  // namespace xspec::eval
