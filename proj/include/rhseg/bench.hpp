#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rhseg/execution.hpp"
#include "rhseg/image.hpp"
#include "rhseg/rhseg.hpp"

namespace rhseg {

struct BenchSpec {
  HyperImage image;
  RhsegParams params;
  // A sequential single-thread baseline is prepended unless it comes first.
  std::vector<ExecutionConfig> configs;
  std::size_t repeats = 3;
};

struct BenchRow {
  std::string label;
  ExecutionConfig config;
  std::vector<std::uint64_t> wall_ns;  // one per repeat
  std::uint64_t median_ns = 0;
  double speedup = 1.0;               // baseline median / this median
  double dissim_fraction = 0.0;       // pair-search time (summed over threads) over wall time, median run
  bool identical = true;              // labels and merge logs equal the baseline's
};

struct BenchReport {
  std::size_t edge = 0;
  std::size_t bands = 0;
  std::size_t levels = 0;
  std::size_t repeats = 0;
  std::vector<BenchRow> rows;

  bool all_identical() const;
  std::string to_text() const;
  std::string to_json() const;
};

BenchReport run_bench(const BenchSpec& spec);

}  // namespace rhseg
