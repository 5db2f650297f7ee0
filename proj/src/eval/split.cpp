#include "xspec/eval/split.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>

#include "xspec/util/files.hpp"

namespace xspec::eval {

std::string_view role_name(Role role) { return role == Role::kTrain ? "train" : "test"; }

Role parse_role(std::string_view text) {
  if (text == "train") return Role::kTrain;
  if (text == "test") return Role::kTest;
  throw std::invalid_argument("unknown role '" + std::string(text) + "'");
}

std::vector<ManifestEntry> DatasetSplit::select(int class_id, Role role, img::Spectrum spectrum) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.class_id == class_id && e.role == role && e.spectrum == spectrum) out.push_back(e);
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.capture_index < b.capture_index; });
  return out;
}

std::vector<int> DatasetSplit::class_ids() const {
  std::set<int> ids;
  for (const auto& e : entries) ids.insert(e.class_id);
  return {ids.begin(), ids.end()};
}

bool DatasetSplit::has_spectrum(img::Spectrum spectrum) const {
  return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.spectrum == spectrum; });
}

void DatasetSplit::validate() const {
  std::set<std::tuple<int, int, int>> seen;
  std::map<std::tuple<int, int>, std::pair<int, int>> counts;  // (spectrum, class) -> (train, test)
  for (const auto& e : entries) {
    const auto key = std::make_tuple(e.class_id, static_cast<int>(e.spectrum), e.capture_index);
    if (!seen.insert(key).second)
      throw std::runtime_error("manifest: capture " + image_id(e.class_id, e.spectrum, e.capture_index) +
                               " listed twice (train and test must be disjoint)");
    auto& c = counts[{static_cast<int>(e.spectrum), e.class_id}];
    (e.role == Role::kTrain ? c.first : c.second)++;
  }
  std::map<int, std::pair<int, int>> reference;
  for (const auto& [key, c] : counts) {
    const int spectrum = std::get<0>(key);
    auto it = reference.find(spectrum);
    if (it == reference.end())
      reference[spectrum] = c;
    else if (it->second != c)
      throw std::runtime_error("manifest: class " + std::to_string(std::get<1>(key)) +
                               " has a different train/test count");
  }
}

std::string encode_manifest(const DatasetSplit& split) {
  std::string out;
  for (const auto& e : split.entries) {
    out += std::to_string(e.class_id) + ' ' + std::string(img::spectrum_name(e.spectrum)) + ' ' + e.image_path +
           ' ' + std::string(role_name(e.role)) + ' ' + std::to_string(e.capture_index) + '\n';
  }
  return out;
}

DatasetSplit decode_manifest(std::string_view text) {
  DatasetSplit split;
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
      throw std::runtime_error("manifest line " + std::to_string(line_no) + ": expected 5 fields");
    ManifestEntry e;
    e.class_id = std::stoi(tokens[0]);
    e.spectrum = img::parse_spectrum(tokens[1]);
    e.image_path = tokens[2];
    e.role = parse_role(tokens[3]);
    e.capture_index = std::stoi(tokens[4]);
    split.entries.push_back(std::move(e));
  }
  return split;
}

void save_manifest(const std::filesystem::path& path, const DatasetSplit& split) {
  atomic_write(path, encode_manifest(split));
}

DatasetSplit load_manifest(const std::filesystem::path& path) { return decode_manifest(read_file(path)); }

std::string image_id(int class_id, img::Spectrum spectrum, int capture_index) {
  return "id" + std::to_string(class_id) + "_" + std::string(img::spectrum_name(spectrum)) + "_" +
         std::to_string(capture_index);
}

}  // namespace xspec::eval
