#include "rhseg/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "rhseg/error.hpp"

namespace rhseg {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::size_t parse_count(const std::map<std::string, std::string, std::less<>>& kv, std::string_view key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw Error(ErrorKind::HeaderMismatch, "header lacks '" + std::string(key) + "'");
  std::size_t v = 0;
  const auto& s = it->second;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || v == 0) {
    throw Error(ErrorKind::HeaderMismatch, "header value '" + s + "' for " + std::string(key) + " is not a positive count");
  }
  return v;
}

void expect(const std::map<std::string, std::string, std::less<>>& kv, std::string_view key, std::string_view want) {
  const auto it = kv.find(key);
  if (it != kv.end() && it->second != want) {
    throw Error(ErrorKind::HeaderMismatch,
                std::string(key) + " '" + it->second + "' is not supported (expected " + std::string(want) + ")");
  }
}

}  // namespace

ImageHeader parse_header(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::HeaderMismatch, "header line '" + line + "' has no '='");
    std::string key(trim(l.substr(0, eq)));
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    kv[key] = std::string(trim(l.substr(eq + 1)));
  }
  ImageHeader h;
  h.width = parse_count(kv, "width");
  h.height = parse_count(kv, "height");
  h.bands = parse_count(kv, "bands");
  expect(kv, "dtype", "f32");
  expect(kv, "interleave", "bsq");
  expect(kv, "byte_order", "le");
  return h;
}

std::string format_header(const ImageHeader& h) {
  std::ostringstream out;
  out << "width = " << h.width << "\nheight = " << h.height << "\nbands = " << h.bands << "\ndtype = " << h.dtype
      << "\ninterleave = " << h.interleave << "\nbyte_order = " << h.byte_order << '\n';
  return out.str();
}

Raster Raster::crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
  if (w == 0 || h == 0 || x + w > width || y + h > height) {
    throw Error(ErrorKind::InvalidArgument, "crop window leaves the " + std::to_string(width) + "x" +
                                                std::to_string(height) + " image");
  }
  Raster out{w, h, bands, std::vector<float>(w * h * bands)};
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) out.samples[(b * h + r) * w + c] = at(y + r, x + c, b);
  return out;
}

Raster Raster::drop_bands(std::span<const std::size_t> bands_to_drop) const {
  std::vector<bool> drop(bands, false);
  for (std::size_t b : bands_to_drop) {
    if (b >= bands) throw Error(ErrorKind::BandMismatch, "band " + std::to_string(b) + " does not exist");
    drop[b] = true;
  }
  Raster out{width, height, 0, {}};
  const std::size_t plane = width * height;
  for (std::size_t b = 0; b < bands; ++b) {
    if (drop[b]) continue;
    out.samples.insert(out.samples.end(), samples.begin() + static_cast<std::ptrdiff_t>(b * plane),
                       samples.begin() + static_cast<std::ptrdiff_t>((b + 1) * plane));
    ++out.bands;
  }
  if (out.bands == 0) throw Error(ErrorKind::BandMismatch, "every band was dropped");
  return out;
}

HyperImage Raster::to_image() const {
  if (width != height) {
    throw Error(ErrorKind::ShapeMismatch, "segmentation needs a square image, got " + std::to_string(width) + "x" +
                                              std::to_string(height));
  }
  return HyperImage(width, bands, samples);
}

Raster Raster::from_image(const HyperImage& image) {
  return Raster{image.edge(), image.edge(), image.bands(), {image.samples().begin(), image.samples().end()}};
}

Raster read_raster(const std::filesystem::path& header_path, const std::filesystem::path& raw_path) {
  std::ifstream hin(header_path);
  if (!hin) throw Error(ErrorKind::Io, "cannot open " + header_path.string());
  std::stringstream text;
  text << hin.rdbuf();
  const ImageHeader h = parse_header(text.str());

  std::ifstream rin(raw_path, std::ios::binary);
  if (!rin) throw Error(ErrorKind::Io, "cannot open " + raw_path.string());
  const auto size = static_cast<std::size_t>(std::filesystem::file_size(raw_path));
  if (size < h.raw_bytes()) {
    throw Error(ErrorKind::ShortFile, raw_path.string() + " holds " + std::to_string(size) + " bytes, header needs " +
                                          std::to_string(h.raw_bytes()));
  }
  if (size > h.raw_bytes()) {
    throw Error(ErrorKind::HeaderMismatch, raw_path.string() + " holds " + std::to_string(size) +
                                               " bytes, header declares " + std::to_string(h.raw_bytes()));
  }
  std::vector<std::uint8_t> bytes(size);
  rin.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!rin) throw Error(ErrorKind::ShortFile, "short read from " + raw_path.string());

  Raster out{h.width, h.height, h.bands, std::vector<float>(size / 4)};
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    const std::uint32_t v = std::uint32_t{bytes[4 * i]} | std::uint32_t{bytes[4 * i + 1]} << 8 |
                            std::uint32_t{bytes[4 * i + 2]} << 16 | std::uint32_t{bytes[4 * i + 3]} << 24;
    out.samples[i] = std::bit_cast<float>(v);
  }
  return out;
}

HyperImage read_image(const std::filesystem::path& header, const std::filesystem::path& raw) {
  return read_raster(header, raw).to_image();
}

void write_image(const HyperImage& image, const std::filesystem::path& header_path,
                 const std::filesystem::path& raw_path) {
  ImageHeader h;
  h.width = h.height = image.edge();
  h.bands = image.bands();
  std::ofstream hout(header_path);
  hout << format_header(h);
  if (!hout) throw Error(ErrorKind::Io, "cannot write " + header_path.string());

  std::vector<std::uint8_t> bytes(image.samples().size() * 4);
  for (std::size_t i = 0; i < image.samples().size(); ++i) {
    const auto v = std::bit_cast<std::uint32_t>(image.samples()[i]);
    for (int k = 0; k < 4; ++k) bytes[4 * i + k] = static_cast<std::uint8_t>(v >> (8 * k));
  }
  std::ofstream rout(raw_path, std::ios::binary);
  rout.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!rout) throw Error(ErrorKind::Io, "cannot write " + raw_path.string());
}

}  // namespace rhseg
