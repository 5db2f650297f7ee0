#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xspec/eval/split.hpp"
#include "xspec/match/score_io.hpp"

namespace xspec::eval {

struct Trial {
  std::string probe;
  std::string gallery;
  match::Label label = match::Label::kImpostor;
};

using TrialSet = std::vector<Trial>;

// Test images of one class on each side of the comparison, ordered by
// capture. Both lists hold the same captures in different spectra (or the
// same list twice for intra-spectral trials).
struct ClassTestImages {
  int class_id = 0;
  std::vector<std::string> probe;
  std::vector<std::string> gallery;
};

struct TrialConfig {
  int probe_index = 0;    // impostor probe: this test image of each class
  int gallery_index = 1;  // vs. this test image of every other class
};

// Genuine: probe[i] vs gallery[j] for every i < j within a class, giving
// T(T-1)/2 per class without symmetric duplicates. Impostor: probe[probe_index]
// of each class vs gallery[gallery_index] of every other class, U(U-1)
// ordered trials. Classes with fewer than two test images are skipped and
// named in *warnings.
TrialSet build_trials(const std::vector<ClassTestImages>& classes, const TrialConfig& config = {},
                      std::vector<std::string>* warnings = nullptr);

// Trials between two spectra of a split, over the images of one role.
TrialSet build_trials(const DatasetSplit& split, img::Spectrum probe_spectrum, img::Spectrum gallery_spectrum,
                      const TrialConfig& config = {}, std::vector<std::string>* warnings = nullptr,
                      Role role = Role::kTest);

// U classes of T placeholder images each; used for protocol arithmetic.
std::vector<ClassTestImages> synthetic_classes(int users, int test_images);

std::size_t count_label(const TrialSet& trials, match::Label label);

// "probe_id gallery_id label" per line.
std::string encode_trials(const TrialSet& trials);
TrialSet decode_trials(std::string_view text);
void save_trials(const std::filesystem::path& path, const TrialSet& trials);
TrialSet load_trials(const std::filesystem::path& path);

}  // namespace xspec::eval
