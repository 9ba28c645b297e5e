#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rhseg {

// Square N x N x B cube of 32-bit samples, stored band-sequential:
// sample(row, col, band) lives at band * N * N + row * N + col.
class HyperImage {
 public:
  HyperImage() = default;
  HyperImage(std::size_t edge, std::size_t bands);
  HyperImage(std::size_t edge, std::size_t bands, std::vector<float> samples);

  std::size_t width() const noexcept { return edge_; }
  std::size_t height() const noexcept { return edge_; }
  std::size_t edge() const noexcept { return edge_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixel_count() const noexcept { return edge_ * edge_; }

  float at(std::size_t row, std::size_t col, std::size_t band) const {
    return samples_[band * edge_ * edge_ + row * edge_ + col];
  }
  float& at(std::size_t row, std::size_t col, std::size_t band) {
    return samples_[band * edge_ * edge_ + row * edge_ + col];
  }

  std::span<const float> samples() const noexcept { return samples_; }
  std::span<float> samples() noexcept { return samples_; }

  // Square sub-cube starting at (row, col).
  HyperImage crop(std::size_t row, std::size_t col, std::size_t edge) const;
  // Copy without the listed bands (indices may repeat or be unsorted).
  HyperImage drop_bands(std::span<const std::size_t> drop) const;

  friend bool operator==(const HyperImage&, const HyperImage&) = default;

 private:
  std::size_t edge_ = 0;
  std::size_t bands_ = 0;
  std::vector<float> samples_;
};

}  // namespace rhseg
