#include "xspec/heads/bundle.hpp"

#include <stdexcept>

#include "xspec/util/files.hpp"

namespace xspec::heads {

std::string_view head_kind_name(HeadKind k) {
  return k == HeadKind::kDoubleSoftmax ? "softmax_double" : "triplet";
}

HeadKind parse_head_kind(std::string_view text) {
  if (text == "softmax_double") return HeadKind::kDoubleSoftmax;
  if (text == "triplet") return HeadKind::kTriplet;
  throw std::invalid_argument("unknown head kind '" + std::string(text) + "'");
}

std::string encode_bundle(const VerificationBundle& b) {
  std::string out = "kind=" + std::string(head_kind_name(b.kind)) + "\n";
  for (const auto& p : b.backbones) out += "backbone=" + p + "\n";
  out += "head=" + b.head + "\n";
  for (const auto& [s, i] : b.routing)
    out += "route." + std::string(img::spectrum_name(s)) + "=" + std::to_string(i) + "\n";
  return out;
}

VerificationBundle decode_bundle(std::string_view text) {
  VerificationBundle b;
  bool have_kind = false;
  for (const auto& line : split_lines(text)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("bundle line without '=': " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "kind") {
      b.kind = parse_head_kind(value);
      have_kind = true;
    } else if (key == "backbone") {
      b.backbones.push_back(value);
    } else if (key == "head") {
      b.head = value;
    } else if (key.rfind("route.", 0) == 0) {
      b.routing[img::parse_spectrum(key.substr(6))] = std::stoi(value);
    } else {
      throw std::invalid_argument("unknown bundle key '" + key + "'");
    }
  }
  if (!have_kind || b.head.empty() || b.backbones.empty())
    throw std::invalid_argument("bundle needs kind, head and at least one backbone");
  const int needed = b.kind == HeadKind::kDoubleSoftmax ? 2 : 1;
  if (static_cast<int>(b.backbones.size()) != needed)
    throw std::invalid_argument("a " + std::string(head_kind_name(b.kind)) + " bundle needs " +
                                std::to_string(needed) + " backbone(s)");
  for (const auto& [s, i] : b.routing)
    if (i < 0 || i >= needed) throw std::invalid_argument("bundle route for " + std::string(img::spectrum_name(s)) +
                                                          " points at a missing backbone");
  return b;
}

void save_bundle(const std::filesystem::path& path, const VerificationBundle& bundle) {
  atomic_write(path, encode_bundle(bundle));
}

VerificationBundle load_bundle(const std::filesystem::path& path) { return decode_bundle(read_file(path)); }

Verifier Verifier::load(const std::filesystem::path& bundle_path) {
  Verifier v;
  v.bundle_ = load_bundle(bundle_path);
  const auto base = bundle_path.parent_path();
  for (const auto& p : v.bundle_.backbones) v.backbones_.push_back(load_embedding_model(base / p));
  if (v.bundle_.kind == HeadKind::kDoubleSoftmax)
    v.double_head_ = load_double_head(base / v.bundle_.head);
  else
    v.triplet_head_ = load_triplet_head(base / v.bundle_.head);
  return v;
}

const EmbeddingModel& Verifier::branch_for(img::Spectrum s) const {
  const auto it = bundle_.routing.find(s);
  if (it == bundle_.routing.end())
    throw std::invalid_argument("bundle has no route for spectrum " + std::string(img::spectrum_name(s)));
  return backbones_.at(static_cast<std::size_t>(it->second));
}

double Verifier::score(const img::SpectralImage& probe, const img::SpectralImage& gallery) const {
  if (bundle_.kind == HeadKind::kDoubleSoftmax)
    return double_head_.score(backbones_[0].embed(probe), backbones_[1].embed(gallery));
  return triplet_head_.score(branch_for(probe.spectrum).embed(probe), branch_for(gallery.spectrum).embed(gallery));
}

}  // namespace xspec::heads
