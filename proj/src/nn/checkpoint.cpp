#include "xspec/nn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>

#include "xspec/util/files.hpp"

namespace xspec::nn {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated data");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::vector<ManifestEntry> parse_header(Reader& r) {
  if (r.str(4) != std::string(kCheckpointMagic, 4))
    throw std::runtime_error("checkpoint: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  std::vector<ManifestEntry> entries(count);
  for (auto& e : entries) {
    e.name = r.str(r.u32());
    const std::uint32_t nd = r.u32();
    for (std::uint32_t d = 0; d < nd; ++d) e.shape.push_back(static_cast<int>(r.u32()));
  }
  return entries;
}

}  // namespace

template <typename T>
std::string encode_checkpoint(const std::vector<NamedTensor<T>>& tensors) {
  std::string out(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.tensor.ndim()));
    for (int d : t.tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  }
  for (const auto& t : tensors)
    for (T v : t.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& bytes) {
  Reader r(bytes);
  return parse_header(r);
}

template <typename T>
void decode_checkpoint(const std::string& bytes, const std::vector<NamedTensor<T>>& tensors) {
  Reader r(bytes);
  const auto entries = parse_header(r);
  if (entries.size() != tensors.size())
    throw std::runtime_error("checkpoint: expected " + std::to_string(tensors.size()) +
                             " tensors, found " + std::to_string(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].name != tensors[i].name || entries[i].shape != tensors[i].tensor.shape())
      throw std::runtime_error("checkpoint: manifest mismatch at '" + tensors[i].name + "' (found '" +
                               entries[i].name + "' " + shape_str(entries[i].shape) + ")");
  }
  for (const auto& t : tensors) {
    Tensor<T> dst = t.tensor;
    for (auto& v : dst.data()) v = static_cast<T>(r.f32());
  }
  if (r.pos() != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamList<T>& params) {
  atomic_write(path, encode_checkpoint(params.all()));
}

template <typename T>
void load_checkpoint(const std::filesystem::path& path, const ParamList<T>& params) {
  decode_checkpoint(read_file(path), params.all());
}

#define XSPEC_INSTANTIATE_CKPT(T)                                                      \
  template std::string encode_checkpoint(const std::vector<NamedTensor<T>>&);         \
  template void decode_checkpoint(const std::string&, const std::vector<NamedTensor<T>>&); \
  template void save_checkpoint(const std::filesystem::path&, const ParamList<T>&);    \
  template void load_checkpoint(const std::filesystem::path&, const ParamList<T>&);

XSPEC_INSTANTIATE_CKPT(float)
XSPEC_INSTANTIATE_CKPT(double)

}  // namespace xspec::nn
