#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "rhseg/region_graph.hpp"

namespace rhseg {

// Square root of the band-sum mean squared error between two regions, given
// their per-band means. Bands are accumulated in ascending order so every
// engine produces the same bits.
inline double sqrt_bsmse_means(const double* mean_i, double n_i, const double* mean_j, double n_j,
                               std::size_t bands) noexcept {
  double acc = 0.0;
  for (std::size_t b = 0; b < bands; ++b) {
    const double d = mean_i[b] - mean_j[b];
    acc += d * d;
  }
  return std::sqrt((n_i * n_j) / (n_i + n_j) * acc);
}

// Same measure from stored band sums; means are derived here, not cached.
// Throws BandMismatch when the sum vectors differ in length.
double sqrt_bsmse(std::uint32_t n_i, std::span<const double> sums_i, std::uint32_t n_j,
                  std::span<const double> sums_j);
double sqrt_bsmse(const RegionView& i, const RegionView& j);

// Pluggable region dissimilarity. The search kernels work on per-step mean
// snapshots, so a measure is expressed over means and pixel counts.
class DissimMeasure {
 public:
  virtual ~DissimMeasure() = default;

  virtual std::string_view name() const = 0;
  virtual double evaluate(const double* mean_i, double n_i, const double* mean_j, double n_j,
                          std::size_t bands) const = 0;

  double evaluate(const RegionView& i, const RegionView& j) const;
};

class SqrtBsmse final : public DissimMeasure {
 public:
  static constexpr std::string_view kName = "sqrt-bsmse";

  std::string_view name() const override { return kName; }
  double evaluate(const double* mean_i, double n_i, const double* mean_j, double n_j,
                  std::size_t bands) const override {
    return sqrt_bsmse_means(mean_i, n_i, mean_j, n_j, bands);
  }
};

// Throws InvalidArgument for unknown names.
const DissimMeasure& measure_by_name(std::string_view name);

}  // namespace rhseg
