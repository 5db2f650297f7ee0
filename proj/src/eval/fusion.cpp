#include "xspec/eval/fusion.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "xspec/match/score_io.hpp"
#include "xspec/util/files.hpp"

namespace xspec::eval {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += match::format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& tok : split_ws(text)) out.push_back(match::parse_double(tok));
  return out;
}

}  // namespace

FusionModel train_fusion(const ScoreMatrix& s, const std::vector<int>& labels, const FusionConfig& config) {
  const std::size_t n = s.rows, k = s.cols;
  if (k == 0) throw std::invalid_argument("train_fusion: need at least one comparator");
  if (labels.size() != n || s.values.size() != n * k) throw std::invalid_argument("train_fusion: size mismatch");
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l != 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("train_fusion: both labels must be present");

  FusionModel m;
  m.l2 = config.l2;
  m.mean.assign(k, 0.0);
  m.stddev.assign(k, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) m.mean[c] += s.at(r, c);
  for (auto& v : m.mean) v /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) m.stddev[c] += (s.at(r, c) - m.mean[c]) * (s.at(r, c) - m.mean[c]);
  for (auto& v : m.stddev) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v == 0) v = 1;
  }

  std::vector<double> x(n * k);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) x[r * k + c] = (s.at(r, c) - m.mean[c]) / m.stddev[c];
  // Each class carries half of the total weight.
  const double w_pos = 0.5 / static_cast<double>(n_pos), w_neg = 0.5 / static_cast<double>(n_neg);

  // Lipschitz bound of the gradient: 0.25 * sum_i c_i |(1, x_i)|^2 + l2.
  double lipschitz = 0;
  for (std::size_t r = 0; r < n; ++r) {
    double sq = 1.0;
    for (std::size_t c = 0; c < k; ++c) sq += x[r * k + c] * x[r * k + c];
    lipschitz += (labels[r] ? w_pos : w_neg) * sq;
  }
  lipschitz = 0.25 * lipschitz + config.l2;
  const double step = 1.0 / lipschitz;

  m.weights.assign(k, 0.0);
  std::vector<double> grad(k + 1);
  for (m.iterations = 0; m.iterations < config.max_iterations; ++m.iterations) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      double z = m.bias;
      for (std::size_t c = 0; c < k; ++c) z += m.weights[c] * x[r * k + c];
      const double resid = (labels[r] ? w_pos : w_neg) * ((labels[r] ? 1.0 : 0.0) - sigmoid(z));
      grad[0] += resid;
      for (std::size_t c = 0; c < k; ++c) grad[c + 1] += resid * x[r * k + c];
    }
    for (std::size_t c = 0; c < k; ++c) grad[c + 1] -= config.l2 * m.weights[c];
    double norm = 0;
    for (double g : grad) norm += g * g;
    m.gradient_norm = std::sqrt(norm);
    if (m.gradient_norm < config.tolerance) break;
    m.bias += step * grad[0];
    for (std::size_t c = 0; c < k; ++c) m.weights[c] += step * grad[c + 1];
  }
  return m;
}

std::vector<double> apply_fusion(const FusionModel& model, const ScoreMatrix& s) {
  const std::size_t k = model.weights.size();
  if (s.cols != k || model.mean.size() != k || model.stddev.size() != k)
    throw std::invalid_argument("apply_fusion: model expects " + std::to_string(k) + " comparators, got " +
                                std::to_string(s.cols));
  std::vector<double> out(s.rows);
  for (std::size_t r = 0; r < s.rows; ++r) {
    double z = model.bias;
    for (std::size_t c = 0; c < k; ++c) z += model.weights[c] * (s.at(r, c) - model.mean[c]) / model.stddev[c];
    out[r] = z;
  }
  return out;
}

std::string encode_fusion(const FusionModel& m) {
  std::string out;
  out += "bias=" + match::format_double(m.bias) + "\n";
  out += "weights=" + join(m.weights) + "\n";
  out += "mean=" + join(m.mean) + "\n";
  out += "stddev=" + join(m.stddev) + "\n";
  out += "l2=" + match::format_double(m.l2) + "\n";
  out += "iterations=" + std::to_string(m.iterations) + "\n";
  out += "gradient_norm=" + match::format_double(m.gradient_norm) + "\n";
  return out;
}

FusionModel decode_fusion(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  for (const char* key : {"bias", "weights", "mean", "stddev"})
    if (!kv.count(key)) throw std::runtime_error(std::string("fusion model: missing key ") + key);
  FusionModel m;
  m.bias = match::parse_double(kv["bias"]);
  m.weights = parse_list(kv["weights"]);
  m.mean = parse_list(kv["mean"]);
  m.stddev = parse_list(kv["stddev"]);
  if (kv.count("l2")) m.l2 = match::parse_double(kv["l2"]);
  if (kv.count("iterations")) m.iterations = std::stoi(kv["iterations"]);
  if (m.mean.size() != m.weights.size() || m.stddev.size() != m.weights.size())
    throw std::runtime_error("fusion model: inconsistent comparator count");
  return m;
}

}  // namespace xspec::eval
