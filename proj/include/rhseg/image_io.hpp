#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhseg/image.hpp"

namespace rhseg {

// Text header next to a raw sample file, one `key = value` per line:
// width, height, bands, dtype (f32), interleave (bsq), byte_order (le).
// Lines starting with '#' are ignored.
struct ImageHeader {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 0;
  std::string dtype = "f32";
  std::string interleave = "bsq";
  std::string byte_order = "le";

  std::size_t raw_bytes() const { return width * height * bands * 4; }
};

// Throws HeaderMismatch on missing keys or unsupported values.
ImageHeader parse_header(std::string_view text);
std::string format_header(const ImageHeader& header);

// Rectangular band-sequential cube as stored on disk. Segmentation needs a
// square HyperImage; crop or convert before running.
struct Raster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t bands = 0;
  std::vector<float> samples;

  float at(std::size_t row, std::size_t col, std::size_t band) const {
    return samples[(band * height + row) * width + col];
  }
  // Throws InvalidArgument when the window leaves the raster.
  Raster crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const;
  // Throws BandMismatch for out-of-range indices.
  Raster drop_bands(std::span<const std::size_t> bands_to_drop) const;
  // Throws ShapeMismatch unless width == height.
  HyperImage to_image() const;
  static Raster from_image(const HyperImage& image);
};

// Throws HeaderMismatch, ShortFile, or Io.
Raster read_raster(const std::filesystem::path& header, const std::filesystem::path& raw);
HyperImage read_image(const std::filesystem::path& header, const std::filesystem::path& raw);
void write_image(const HyperImage& image, const std::filesystem::path& header, const std::filesystem::path& raw);

}  // namespace rhseg
