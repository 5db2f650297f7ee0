#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xspec::match {

enum class Label { kGenuine, kImpostor };

std::string_view label_name(Label label);
Label parse_label(std::string_view text);

// One comparison in canonical similarity polarity.
struct ScoreRecord {
  std::string probe_id;
  std::string gallery_id;
  std::string comparator_id;
  Label label = Label::kImpostor;
  double score = 0;
};

using ScoreSet = std::vector<ScoreRecord>;

// "probe_id gallery_id comparator_id label score" per line; scores use the
// shortest round-trip decimal form.
std::string encode_scores(const ScoreSet& scores);
ScoreSet decode_scores(std::string_view text);
void save_scores(const std::filesystem::path& path, const ScoreSet& scores);
ScoreSet load_scores(const std::filesystem::path& path);

// Splits a score set into its genuine and impostor values.
void split_by_label(const ScoreSet& scores, std::vector<double>& genuine, std::vector<double>& impostor);

std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace xspec::match
