#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rhseg/image.hpp"
#include "rhseg/region_graph.hpp"

namespace rhseg {

struct SyntheticSpec {
  std::size_t edge = 64;
  std::size_t bands = 16;
  std::size_t classes = 4;
  std::size_t regions = 4;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
};

struct Patch {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint32_t truth_class = 0;  // 1-based
};

struct SyntheticScene {
  HyperImage image;
  LabelMap truth;  // class per pixel, 0 would mean unlabeled
  std::vector<Patch> patches;
};

// Tiles the image with `regions` rectangles on a rows x cols grid (rows is
// the largest divisor of `regions` not above its square root). Patch p gets
// class p % classes + 1. Class c has base level 100 * c + 10 * b in band b;
// Gaussian noise is drawn per sample from a generator seeded with `seed`.
// Throws InfeasibleLayout when regions < classes, classes == 0, or the grid
// does not fit.
SyntheticScene gen_synthetic(const SyntheticSpec& spec);

}  // namespace rhseg
