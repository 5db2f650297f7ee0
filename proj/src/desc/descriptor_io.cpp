#include "xspec/desc/descriptor.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <stdexcept>

#include "xspec/util/files.hpp"

namespace xspec::desc {

namespace {

constexpr char kMagic[4] = {'X', 'D', 'S', 'C'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <typename U>
void put(std::string& out, U value) {
  char buf[sizeof(U)];
  std::memcpy(buf, &value, sizeof(U));
  out.append(buf, sizeof(U));
}

template <typename U>
U take(std::string_view bytes, std::size_t& pos) {
  if (bytes.size() - pos < sizeof(U)) throw std::runtime_error("descriptor: truncated data");
  U value;
  std::memcpy(&value, bytes.data() + pos, sizeof(U));
  pos += sizeof(U);
  return value;
}

std::string format_float(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

float parse_float(const std::string& token) {
  float v = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw std::runtime_error("keypoints: bad number '" + token + "'");
  return v;
}

}  // namespace

std::string_view kind_name(DescriptorKind kind) {
  switch (kind) {
    case DescriptorKind::kHOG: return "HOG";
    case DescriptorKind::kLBP: return "LBP";
    case DescriptorKind::kEmbed: return "EMBED";
  }
  return "?";
}

std::uint64_t fingerprint(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_descriptor(const Descriptor& d) {
  std::string out(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(d.kind));
  put<std::uint64_t>(out, d.params_hash);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(d.values.size()));
  for (double v : d.values) put<float>(out, static_cast<float>(v));
  return out;
}

Descriptor decode_descriptor(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw std::runtime_error("descriptor: bad magic");
  std::size_t pos = 4;
  if (take<std::uint32_t>(bytes, pos) != kVersion) throw std::runtime_error("descriptor: unsupported version");
  Descriptor d;
  const auto kind = take<std::uint8_t>(bytes, pos);
  if (kind > 2) throw std::runtime_error("descriptor: unknown kind");
  d.kind = static_cast<DescriptorKind>(kind);
  d.params_hash = take<std::uint64_t>(bytes, pos);
  const auto n = take<std::uint32_t>(bytes, pos);
  if (bytes.size() - pos != static_cast<std::size_t>(n) * sizeof(float))
    throw std::runtime_error("descriptor: length prefix does not match payload");
  d.values.resize(n);
  for (auto& v : d.values) v = take<float>(bytes, pos);
  return d;
}

void save_descriptor(const std::filesystem::path& path, const Descriptor& d) {
  atomic_write(path, encode_descriptor(d));
}

Descriptor load_descriptor(const std::filesystem::path& path) { return decode_descriptor(read_file(path)); }

std::string encode_keypoints(const KeypointSet& set) {
  std::string out;
  for (const auto& kp : set) {
    out += format_float(kp.x) + ' ' + format_float(kp.y) + ' ' + format_float(kp.scale) + ' ' +
           format_float(kp.orientation);
    for (float v : kp.descriptor) out += ' ' + format_float(v);
    out += '\n';
  }
  return out;
}

KeypointSet decode_keypoints(std::string_view text) {
  KeypointSet set;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto tokens = split_ws(text.substr(start, end - start));
    start = end + 1;
    if (tokens.empty()) continue;
    if (tokens.size() != 4 + 128) throw std::runtime_error("keypoints: expected 132 fields per line");
    Keypoint kp;
    kp.x = parse_float(tokens[0]);
    kp.y = parse_float(tokens[1]);
    kp.scale = parse_float(tokens[2]);
    kp.orientation = parse_float(tokens[3]);
    for (int i = 0; i < 128; ++i) kp.descriptor[i] = parse_float(tokens[4 + i]);
    set.push_back(kp);
  }
  return set;
}

void save_keypoints(const std::filesystem::path& path, const KeypointSet& set) {
  atomic_write(path, encode_keypoints(set));
}

KeypointSet load_keypoints(const std::filesystem::path& path) { return decode_keypoints(read_file(path)); }

}  // namespace xspec::desc
