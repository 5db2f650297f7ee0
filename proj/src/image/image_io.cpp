#include "xspec/image/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cctype>
#include <stdexcept>

#include "xspec/util/files.hpp"

namespace xspec::img {

namespace {

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.f, 1.f) * 255.f));
}

std::string encode_png(const SpectralImage& image) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.width);
  desc.height = static_cast<png_uint_32>(image.height);
  desc.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> raw(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), raw.begin(), quantize);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, raw.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode: ") + desc.message);
  std::string buffer(size, '\0');
  if (!png_image_write_to_memory(&desc, buffer.data(), &size, 0, raw.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode: ") + desc.message);
  buffer.resize(size);
  return buffer;
}

}  // namespace

void write_png(const std::filesystem::path& path, const SpectralImage& image) {
  atomic_write(path, encode_png(image));
}

SpectralImage read_png(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size()))
    throw std::runtime_error(path.string() + ": " + desc.message);
  const bool color = (desc.format & PNG_FORMAT_FLAG_COLOR) != 0;
  desc.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  SpectralImage image(static_cast<int>(desc.height), static_cast<int>(desc.width), color ? 3 : 1);
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, raw.data(), 0, nullptr)) {
    png_image_free(&desc);
    throw std::runtime_error(path.string() + ": " + desc.message);
  }
  for (std::size_t i = 0; i < raw.size(); ++i) image.pixels[i] = raw[i] / 255.f;
  return image;
}

void write_pgm(const std::filesystem::path& path, const SpectralImage& image) {
  const SpectralImage gray = to_grayscale(image);
  std::string out = "P5\n" + std::to_string(gray.width) + " " + std::to_string(gray.height) + "\n255\n";
  out.reserve(out.size() + gray.pixels.size());
  for (float v : gray.pixels) out.push_back(static_cast<char>(quantize(v)));
  atomic_write(path, out);
}

SpectralImage read_pgm(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P5") throw std::runtime_error(path.string() + " is not a binary PGM");
  const int w = std::stoi(next_token());
  const int h = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (maxval != 255) throw std::runtime_error(path.string() + ": only 8-bit PGM is supported");
  ++pos;
  if (bytes.size() - pos < static_cast<std::size_t>(w) * h)
    throw std::runtime_error(path.string() + ": truncated PGM data");
  SpectralImage image(h, w, 1);
  for (std::size_t i = 0; i < image.pixels.size(); ++i)
    image.pixels[i] = static_cast<std::uint8_t>(bytes[pos + i]) / 255.f;
  return image;
}

SpectralImage read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  throw std::invalid_argument("unsupported image extension '" + ext + "'");
}

void write_image(const std::filesystem::path& path, const SpectralImage& image) {
  const auto ext = path.extension().string();
  if (ext == ".png") return write_png(path, image);
  if (ext == ".pgm") return write_pgm(path, image);
  throw std::invalid_argument("unsupported image extension '" + ext + "'");
}

}  // namespace xspec::img
