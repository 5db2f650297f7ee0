#include "xspec/gan/translator_config.hpp"

#include <bit>
#include <map>
#include <stdexcept>

#include "xspec/match/score_io.hpp"

namespace xspec::gan {

std::string_view direction_name(Direction d) { return d == Direction::kVisToNir ? "vis2nir" : "nir2vis"; }

Direction parse_direction(std::string_view text) {
  if (text == "vis2nir") return Direction::kVisToNir;
  if (text == "nir2vis") return Direction::kNirToVis;
  throw std::invalid_argument("unknown direction '" + std::string(text) + "' (expected vis2nir or nir2vis)");
}

img::Spectrum source_spectrum(Direction d) {
  return d == Direction::kVisToNir ? img::Spectrum::kVIS : img::Spectrum::kNIR;
}

img::Spectrum target_spectrum(Direction d) {
  return d == Direction::kVisToNir ? img::Spectrum::kNIR : img::Spectrum::kVIS;
}

void TranslatorConfig::validate() const {
  if (image_size < 8 || !std::has_single_bit(static_cast<unsigned>(image_size)))
    throw std::invalid_argument("image size must be a power of two >= 8, got " + std::to_string(image_size));
  if ((in_channels != 1 && in_channels != 3) || (out_channels != 1 && out_channels != 3))
    throw std::invalid_argument("channels must be 1 or 3");
  if (lambda_l1 < 0) throw std::invalid_argument("lambda must be non-negative");
  if (lr <= 0) throw std::invalid_argument("learning rate must be positive");
  if (epochs < 0) throw std::invalid_argument("epochs must be non-negative");
  if (ngf < 1 || ndf < 1) throw std::invalid_argument("filter counts must be positive");
  if (disc_layers < 1) throw std::invalid_argument("discriminator needs at least one stride-2 block");
  if (dropout < 0 || dropout >= 1) throw std::invalid_argument("dropout must lie in [0, 1)");
  if (val_fraction < 0 || val_fraction >= 1) throw std::invalid_argument("val_fraction must lie in [0, 1)");
}

std::string encode_config(const TranslatorConfig& c) {
  using match::format_double;
  std::string out;
  out += "image_size=" + std::to_string(c.image_size) + "\n";
  out += "in_channels=" + std::to_string(c.in_channels) + "\n";
  out += "out_channels=" + std::to_string(c.out_channels) + "\n";
  out += "lambda=" + format_double(c.lambda_l1) + "\n";
  out += "lr=" + format_double(c.lr) + "\n";
  out += "beta1=" + format_double(c.beta1) + "\n";
  out += "beta2=" + format_double(c.beta2) + "\n";
  out += "epochs=" + std::to_string(c.epochs) + "\n";
  out += "seed=" + std::to_string(c.seed) + "\n";
  out += "direction=" + std::string(direction_name(c.direction)) + "\n";
  out += "ngf=" + std::to_string(c.ngf) + "\n";
  out += "ndf=" + std::to_string(c.ndf) + "\n";
  out += "disc_layers=" + std::to_string(c.disc_layers) + "\n";
  out += "dropout=" + format_double(c.dropout) + "\n";
  out += "patience=" + std::to_string(c.patience) + "\n";
  out += "val_fraction=" + format_double(c.val_fraction) + "\n";
  return out;
}

TranslatorConfig decode_config(std::string_view text) {
  TranslatorConfig c;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line without '=': " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "image_size") c.image_size = std::stoi(value);
    else if (key == "in_channels") c.in_channels = std::stoi(value);
    else if (key == "out_channels") c.out_channels = std::stoi(value);
    else if (key == "lambda") c.lambda_l1 = match::parse_double(value);
    else if (key == "lr") c.lr = match::parse_double(value);
    else if (key == "beta1") c.beta1 = match::parse_double(value);
    else if (key == "beta2") c.beta2 = match::parse_double(value);
    else if (key == "epochs") c.epochs = std::stoi(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "direction") c.direction = parse_direction(value);
    else if (key == "ngf") c.ngf = std::stoi(value);
    else if (key == "ndf") c.ndf = std::stoi(value);
    else if (key == "disc_layers") c.disc_layers = std::stoi(value);
    else if (key == "dropout") c.dropout = match::parse_double(value);
    else if (key == "patience") c.patience = std::stoi(value);
    else if (key == "val_fraction") c.val_fraction = match::parse_double(value);
    else throw std::invalid_argument("unknown translator config key '" + key + "'");
  }
  c.validate();
  return c;
}

}  // namespace xspec::gan
