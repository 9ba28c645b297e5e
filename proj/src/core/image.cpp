#include "rhseg/image.hpp"

#include <algorithm>
#include <string>

#include "rhseg/error.hpp"

namespace rhseg {

HyperImage::HyperImage(std::size_t edge, std::size_t bands)
    : HyperImage(edge, bands, std::vector<float>(edge * edge * bands, 0.0f)) {}

HyperImage::HyperImage(std::size_t edge, std::size_t bands, std::vector<float> samples)
    : edge_(edge), bands_(bands), samples_(std::move(samples)) {
  if (edge == 0 || bands == 0) {
    throw Error(ErrorKind::InvalidArgument, "image edge and band count must be >= 1");
  }
  if (samples_.size() != edge * edge * bands) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(edge * edge * bands) + " samples, got " +
                    std::to_string(samples_.size()));
  }
}

HyperImage HyperImage::crop(std::size_t row, std::size_t col, std::size_t edge) const {
  if (edge == 0 || row + edge > edge_ || col + edge > edge_) {
    throw Error(ErrorKind::DimensionMismatch, "crop window exceeds image bounds");
  }
  HyperImage out(edge, bands_);
  for (std::size_t b = 0; b < bands_; ++b) {
    for (std::size_t r = 0; r < edge; ++r) {
      for (std::size_t c = 0; c < edge; ++c) out.at(r, c, b) = at(row + r, col + c, b);
    }
  }
  return out;
}

HyperImage HyperImage::drop_bands(std::span<const std::size_t> drop) const {
  std::vector<bool> dropped(bands_, false);
  for (std::size_t b : drop) {
    if (b >= bands_) throw Error(ErrorKind::InvalidArgument, "band index out of range: " + std::to_string(b));
    dropped[b] = true;
  }
  const std::size_t keep = static_cast<std::size_t>(std::count(dropped.begin(), dropped.end(), false));
  if (keep == 0) throw Error(ErrorKind::InvalidArgument, "cannot drop every band");

  const std::size_t plane = edge_ * edge_;
  std::vector<float> samples;
  samples.reserve(plane * keep);
  for (std::size_t b = 0; b < bands_; ++b) {
    if (dropped[b]) continue;
    samples.insert(samples.end(), samples_.begin() + static_cast<std::ptrdiff_t>(b * plane),
                   samples_.begin() + static_cast<std::ptrdiff_t>((b + 1) * plane));
  }
  return HyperImage(edge_, keep, std::move(samples));
}

}  // namespace rhseg
