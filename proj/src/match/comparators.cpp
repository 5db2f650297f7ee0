#include "xspec/match/comparators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace xspec::match {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("descriptor lengths differ: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
}

void check_compatible(const desc::Descriptor& a, const desc::Descriptor& b) {
  if (a.kind != b.kind || a.params_hash != b.params_hash)
    throw std::invalid_argument("descriptors come from different extractor configurations");
}

double squared_distance(const std::array<float, 128>& a, const std::array<float, 128>& b) {
  double acc = 0;
  for (int i = 0; i < 128; ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc;
}

// For each element of `from`, the index of its nearest neighbour in `to`, or
// -1 when the ratio test fails. Ties keep the lower index.
std::vector<int> ratio_matches(const desc::KeypointSet& from, const desc::KeypointSet& to, double ratio) {
  std::vector<int> out(from.size(), -1);
  const double ratio2 = ratio * ratio;
  for (std::size_t i = 0; i < from.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    double second = best;
    int best_j = -1;
    for (std::size_t j = 0; j < to.size(); ++j) {
      const double d = squared_distance(from[i].descriptor, to[j].descriptor);
      if (d < best) {
        second = best;
        best = d;
        best_j = static_cast<int>(j);
      } else if (d < second) {
        second = d;
      }
    }
    if (best_j >= 0 && best < ratio2 * second) out[i] = best_j;
  }
  return out;
}

}  // namespace

double canonical(const Score& s) { return s.polarity == Polarity::kDistance ? -s.value : s.value; }

double euclidean(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

double chi2(std::span<const double> a, std::span<const double> b, double eps) {
  check_lengths(a, b);
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0) throw std::invalid_argument("chi2: negative histogram entry");
    const double d = a[i] - b[i];
    acc += d * d / (a[i] + b[i] + eps);
  }
  return acc;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  check_lengths(a, b);
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) throw std::invalid_argument("cosine: zero vector");
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

Score euclidean_distance(const desc::Descriptor& a, const desc::Descriptor& b) {
  check_compatible(a, b);
  return {euclidean(a.values, b.values), Polarity::kDistance, "euclidean"};
}

Score chi2_distance(const desc::Descriptor& a, const desc::Descriptor& b) {
  check_compatible(a, b);
  return {chi2(a.values, b.values), Polarity::kDistance, "chi2"};
}

Score cosine_distance(const desc::Descriptor& a, const desc::Descriptor& b) {
  check_compatible(a, b);
  return {cosine(a.values, b.values), Polarity::kDistance, "cosine"};
}

int sift_pair_count(const desc::KeypointSet& a, const desc::KeypointSet& b, double ratio) {
  if (a.empty() || b.empty()) return 0;
  const auto ab = ratio_matches(a, b, ratio);
  const auto ba = ratio_matches(b, a, ratio);
  int pairs = 0;
  for (std::size_t i = 0; i < ab.size(); ++i)
    if (ab[i] >= 0 && ba[static_cast<std::size_t>(ab[i])] == static_cast<int>(i)) ++pairs;
  return pairs;
}

Score sift_match_score(const desc::KeypointSet& a, const desc::KeypointSet& b, double ratio) {
  Score s{0.0, Polarity::kSimilarity, "sift"};
  if (a.empty() || b.empty()) return s;
  const double mean_size = 0.5 * static_cast<double>(a.size() + b.size());
  s.value = sift_pair_count(a, b, ratio) / mean_size;
  return s;
}

}  // namespace xspec::match
