#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xspec/heads/triplet.hpp"

namespace xspec::heads {

enum class HeadKind { kDoubleSoftmax, kTriplet };

std::string_view head_kind_name(HeadKind k);  // "softmax_double" / "triplet"
HeadKind parse_head_kind(std::string_view text);

// Verification model description. Paths are relative to the bundle file.
// routing maps each spectrum to a backbone index; a double head sends the
// probe through branch a (index 0) and the gallery through branch b.
struct VerificationBundle {
  HeadKind kind = HeadKind::kTriplet;
  std::vector<std::string> backbones;
  std::string head;
  std::map<img::Spectrum, int> routing;
};

std::string encode_bundle(const VerificationBundle& bundle);
VerificationBundle decode_bundle(std::string_view text);
void save_bundle(const std::filesystem::path& path, const VerificationBundle& bundle);
VerificationBundle load_bundle(const std::filesystem::path& path);

// Loaded bundle ready for scoring image pairs.
class Verifier {
 public:
  static Verifier load(const std::filesystem::path& bundle_path);

  // Similarity (canonical polarity) of a probe and a gallery image.
  double score(const img::SpectralImage& probe, const img::SpectralImage& gallery) const;
  const VerificationBundle& bundle() const { return bundle_; }

 private:
  const EmbeddingModel& branch_for(img::Spectrum s) const;

  VerificationBundle bundle_;
  std::vector<EmbeddingModel> backbones_;
  DoubleHead double_head_;
  TripletHead triplet_head_;
};

}  // namespace xspec::heads
