#include "xspec/match/score_io.hpp"

#include <charconv>
#include <stdexcept>

#include "xspec/util/files.hpp"

namespace xspec::match {

std::string_view label_name(Label label) { return label == Label::kGenuine ? "genuine" : "impostor"; }

Label parse_label(std::string_view text) {
  if (text == "genuine") return Label::kGenuine;
  if (text == "impostor") return Label::kImpostor;
  throw std::invalid_argument("unknown label '" + std::string(text) + "'");
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::invalid_argument("bad number '" + std::string(text) + "'");
  return v;
}

std::string encode_scores(const ScoreSet& scores) {
  std::string out;
  for (const auto& r : scores) {
    out += r.probe_id;
    out += ' ';
    out += r.gallery_id;
    out += ' ';
    out += r.comparator_id;
    out += ' ';
    out += label_name(r.label);
    out += ' ';
    out += format_double(r.score);
    out += '\n';
  }
  return out;
}

ScoreSet decode_scores(std::string_view text) {
  ScoreSet out;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto tokens = split_ws(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (tokens.empty()) continue;
    if (tokens.size() != 5)
      throw std::runtime_error("score file line " + std::to_string(line_no) + ": expected 5 fields");
    out.push_back({tokens[0], tokens[1], tokens[2], parse_label(tokens[3]), parse_double(tokens[4])});
  }
  return out;
}

void save_scores(const std::filesystem::path& path, const ScoreSet& scores) {
  atomic_write(path, encode_scores(scores));
}

ScoreSet load_scores(const std::filesystem::path& path) { return decode_scores(read_file(path)); }

void split_by_label(const ScoreSet& scores, std::vector<double>& genuine, std::vector<double>& impostor) {
  genuine.clear();
  impostor.clear();
  for (const auto& r : scores) (r.label == Label::kGenuine ? genuine : impostor).push_back(r.score);
}

}  // namespace xspec::match
