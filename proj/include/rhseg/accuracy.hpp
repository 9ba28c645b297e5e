#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rhseg/region_graph.hpp"

namespace rhseg {

struct AccuracyReport {
  std::vector<std::uint32_t> classes;                    // labeled ground-truth classes, ascending
  std::map<std::uint32_t, std::uint32_t> assignment;     // segment -> class (0 when it covers no labeled pixel)
  std::vector<std::vector<std::size_t>> confusion;       // [true class index][assigned class index]
  std::vector<double> per_class;                         // percent, by class index
  std::size_t labeled_pixels = 0;
  std::size_t correct_pixels = 0;
  std::optional<double> overall;                         // percent; absent without labeled pixels

  std::string to_text() const;
  std::string to_json() const;
};

// Each segment takes the ground-truth class covering most of its labeled
// pixels (ties to the smaller class). Ground-truth 0 is unlabeled and takes
// part in neither the assignment nor the scores. Throws DimensionMismatch.
AccuracyReport assign_plurality_classes(const LabelMap& segments, const LabelMap& truth);

}  // namespace rhseg
