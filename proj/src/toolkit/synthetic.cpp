#include "rhseg/synthetic.hpp"

#include <random>
#include <string>

#include "rhseg/error.hpp"

namespace rhseg {

SyntheticScene gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes == 0 || spec.regions < spec.classes) {
    throw Error(ErrorKind::InfeasibleLayout, "need regions >= classes >= 1");
  }
  if (spec.edge == 0 || spec.bands == 0) throw Error(ErrorKind::InvalidArgument, "empty image");
  if (spec.noise_sigma < 0.0) throw Error(ErrorKind::InvalidArgument, "noise sigma must be >= 0");
  std::size_t rows = 1;
  for (std::size_t d = 1; d * d <= spec.regions; ++d) {
    if (spec.regions % d == 0) rows = d;
  }
  const std::size_t cols = spec.regions / rows;
  if (cols > spec.edge) {
    throw Error(ErrorKind::InfeasibleLayout, std::to_string(rows) + "x" + std::to_string(cols) +
                                                 " patches do not fit a " + std::to_string(spec.edge) + " edge");
  }

  SyntheticScene scene;
  const std::size_t n = spec.edge;
  scene.truth = LabelMap{n, n, std::vector<std::uint32_t>(n * n)};
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      Patch p;
      p.row = i * n / rows;
      p.col = j * n / cols;
      p.height = (i + 1) * n / rows - p.row;
      p.width = (j + 1) * n / cols - p.col;
      p.truth_class = static_cast<std::uint32_t>((i * cols + j) % spec.classes + 1);
      for (std::size_t r = p.row; r < p.row + p.height; ++r)
        for (std::size_t c = p.col; c < p.col + p.width; ++c) scene.truth.labels[r * n + c] = p.truth_class;
      scene.patches.push_back(p);
    }
  }

  scene.image = HyperImage(n, spec.bands);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  for (std::size_t b = 0; b < spec.bands; ++b) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        double v = 100.0 * scene.truth.labels[r * n + c] + 10.0 * static_cast<double>(b);
        if (spec.noise_sigma > 0.0) v += noise(rng);
        scene.image.at(r, c, b) = static_cast<float>(v);
      }
    }
  }
  return scene;
}

}  // namespace rhseg
