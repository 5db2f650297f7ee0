#pragma once

#include <span>
#include <string>

#include "xspec/desc/descriptor.hpp"

namespace xspec::match {

enum class Polarity { kSimilarity, kDistance };

struct Score {
  double value = 0;
  Polarity polarity = Polarity::kSimilarity;
  std::string comparator_id;
};

// Similarity form: distances are negated, similarities pass through.
double canonical(const Score& s);

// Vector forms; equal lengths required.
double euclidean(std::span<const double> a, std::span<const double> b);
double chi2(std::span<const double> a, std::span<const double> b, double eps = 1e-10);
double cosine(std::span<const double> a, std::span<const double> b);

// Descriptor forms additionally require matching params_hash.
Score euclidean_distance(const desc::Descriptor& a, const desc::Descriptor& b);
Score chi2_distance(const desc::Descriptor& a, const desc::Descriptor& b);
Score cosine_distance(const desc::Descriptor& a, const desc::Descriptor& b);

// Number of mutual nearest-neighbour pairs passing the ratio test in both
// directions.
int sift_pair_count(const desc::KeypointSet& a, const desc::KeypointSet& b, double ratio = 0.75);

// pairs / ((|A| + |B|) / 2); 0 when either set is empty.
Score sift_match_score(const desc::KeypointSet& a, const desc::KeypointSet& b, double ratio = 0.75);

}  // namespace xspec::match
