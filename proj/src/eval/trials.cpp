#include "xspec/eval/trials.hpp"

#include <algorithm>
#include <stdexcept>

#include "xspec/util/files.hpp"

namespace xspec::eval {

TrialSet build_trials(const std::vector<ClassTestImages>& classes, const TrialConfig& config,
                      std::vector<std::string>* warnings) {
  if (config.probe_index < 0 || config.gallery_index < 0)
    throw std::invalid_argument("trial indices must be non-negative");
  std::vector<const ClassTestImages*> usable;
  for (const auto& c : classes) {
    if (c.probe.size() != c.gallery.size())
      throw std::invalid_argument("class " + std::to_string(c.class_id) + ": probe/gallery image counts differ");
    if (c.probe.size() < 2) {
      if (warnings) warnings->push_back("class " + std::to_string(c.class_id) + " has fewer than 2 test images; skipped");
      continue;
    }
    usable.push_back(&c);
  }

  TrialSet trials;
  for (const auto* c : usable) {
    const std::size_t t = c->probe.size();
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t j = i + 1; j < t; ++j) trials.push_back({c->probe[i], c->gallery[j], match::Label::kGenuine});
  }
  for (const auto* p : usable) {
    if (static_cast<std::size_t>(config.probe_index) >= p->probe.size()) continue;
    for (const auto* g : usable) {
      if (p == g || static_cast<std::size_t>(config.gallery_index) >= g->gallery.size()) continue;
      trials.push_back({p->probe[static_cast<std::size_t>(config.probe_index)],
                        g->gallery[static_cast<std::size_t>(config.gallery_index)], match::Label::kImpostor});
    }
  }
  return trials;
}

TrialSet build_trials(const DatasetSplit& split, img::Spectrum probe_spectrum, img::Spectrum gallery_spectrum,
                      const TrialConfig& config, std::vector<std::string>* warnings, Role role) {
  std::vector<ClassTestImages> classes;
  for (int id : split.class_ids()) {
    const auto probes = split.select(id, role, probe_spectrum);
    const auto gallery = split.select(id, role, gallery_spectrum);
    ClassTestImages c;
    c.class_id = id;
    for (const auto& e : probes) c.probe.push_back(image_id(id, e.spectrum, e.capture_index));
    for (const auto& e : gallery) c.gallery.push_back(image_id(id, e.spectrum, e.capture_index));
    if (c.probe.size() != c.gallery.size()) {
      if (warnings)
        warnings->push_back("class " + std::to_string(id) + " lacks paired " + std::string(role_name(role)) +
                            " captures; skipped");
      continue;
    }
    classes.push_back(std::move(c));
  }
  return build_trials(classes, config, warnings);
}

std::vector<ClassTestImages> synthetic_classes(int users, int test_images) {
  if (users < 0 || test_images < 0) throw std::invalid_argument("users and test images must be non-negative");
  std::vector<ClassTestImages> classes(static_cast<std::size_t>(users));
  for (int u = 0; u < users; ++u) {
    classes[u].class_id = u;
    for (int t = 0; t < test_images; ++t) {
      classes[u].probe.push_back("u" + std::to_string(u) + "_p" + std::to_string(t));
      classes[u].gallery.push_back("u" + std::to_string(u) + "_g" + std::to_string(t));
    }
  }
  return classes;
}

std::size_t count_label(const TrialSet& trials, match::Label label) {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [&](const Trial& t) { return t.label == label; }));
}

std::string encode_trials(const TrialSet& trials) {
  std::string out;
  for (const auto& t : trials)
    out += t.probe + " " + t.gallery + " " + std::string(match::label_name(t.label)) + "\n";
  return out;
}

TrialSet decode_trials(std::string_view text) {
  TrialSet trials;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    const auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 3) throw std::invalid_argument("trial line " + std::to_string(line_no) + ": expected 3 fields");
    trials.push_back({f[0], f[1], match::parse_label(f[2])});
  }
  return trials;
}

void save_trials(const std::filesystem::path& path, const TrialSet& trials) { atomic_write(path, encode_trials(trials)); }

TrialSet load_trials(const std::filesystem::path& path) { return decode_trials(read_file(path)); }

}  // namespace xspec::eval
