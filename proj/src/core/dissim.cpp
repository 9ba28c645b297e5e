#include "rhseg/dissim.hpp"

#include <string>
#include <vector>

#include "rhseg/error.hpp"

namespace rhseg {

double sqrt_bsmse(std::uint32_t n_i, std::span<const double> sums_i, std::uint32_t n_j,
                  std::span<const double> sums_j) {
  if (sums_i.size() != sums_j.size()) {
    throw Error(ErrorKind::BandMismatch, std::to_string(sums_i.size()) + " vs " +
                                             std::to_string(sums_j.size()) + " bands");
  }
  if (n_i == 0 || n_j == 0) throw Error(ErrorKind::InvalidArgument, "pixel count must be >= 1");
  const double ni = static_cast<double>(n_i);
  const double nj = static_cast<double>(n_j);
  double acc = 0.0;
  for (std::size_t b = 0; b < sums_i.size(); ++b) {
    const double d = sums_i[b] / ni - sums_j[b] / nj;
    acc += d * d;
  }
  return std::sqrt((ni * nj) / (ni + nj) * acc);
}

double sqrt_bsmse(const RegionView& i, const RegionView& j) {
  return sqrt_bsmse(i.pixel_count, i.band_sums, j.pixel_count, j.band_sums);
}

double DissimMeasure::evaluate(const RegionView& i, const RegionView& j) const {
  if (i.band_sums.size() != j.band_sums.size()) {
    throw Error(ErrorKind::BandMismatch, "regions disagree on band count");
  }
  const std::size_t bands = i.band_sums.size();
  const double ni = static_cast<double>(i.pixel_count);
  const double nj = static_cast<double>(j.pixel_count);
  std::vector<double> mi(bands);
  std::vector<double> mj(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    mi[b] = i.band_sums[b] / ni;
    mj[b] = j.band_sums[b] / nj;
  }
  return evaluate(mi.data(), ni, mj.data(), nj, bands);
}

const DissimMeasure& measure_by_name(std::string_view name) {
  static const SqrtBsmse sqrt_bsmse_measure;
  if (name == SqrtBsmse::kName) return sqrt_bsmse_measure;
  throw Error(ErrorKind::InvalidArgument, "unknown dissimilarity measure '" + std::string(name) + "'");
}

}  // namespace rhseg
