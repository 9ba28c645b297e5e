#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rhseg/image.hpp"

namespace rhseg {

using RegionId = std::uint32_t;
inline constexpr RegionId kNoRegion = std::numeric_limits<RegionId>::max();

enum class Connectivity : int { Four = 4, Eight = 8 };

// Owning region description, used to rebuild graphs (wire decode, tests).
struct Region {
  RegionId id = 0;
  std::uint32_t pixel_count = 0;
  std::vector<double> band_sums;
  std::vector<RegionId> adjacency;  // ascending

  friend bool operator==(const Region&, const Region&) = default;
};

// Non-owning view of a live region inside a RegionGraph.
struct RegionView {
  RegionId id = 0;
  std::uint32_t pixel_count = 0;
  std::span<const double> band_sums;
  std::span<const RegionId> adjacency;
};

enum class MergeKind : std::uint8_t { Adjacent = 0, NonAdjacent = 1 };

struct MergeRecord {
  std::size_t step = 0;
  RegionId survivor = 0;
  RegionId absorbed = 0;
  double dissimilarity = 0.0;
  MergeKind kind = MergeKind::Adjacent;

  friend bool operator==(const MergeRecord&, const MergeRecord&) = default;
};

struct MergeHierarchy {
  std::size_t initial_region_count = 0;
  std::vector<MergeRecord> records;

  std::size_t final_region_count() const { return initial_region_count - records.size(); }

  friend bool operator==(const MergeHierarchy&, const MergeHierarchy&) = default;
};

struct LabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint32_t> labels;  // row-major

  std::uint32_t at(std::size_t row, std::size_t col) const { return labels[row * width + col]; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

// Region adjacency graph under iterative merging. Region ids index flat
// storage; merged-away regions are tombstoned (pixel_count == 0) so ids stay
// stable for the lifetime of the graph.
class RegionGraph {
 public:
  RegionGraph() = default;

  // Rebuilds a graph from explicit parts. `id_capacity` bounds region ids;
  // every pixel of `assignment` (edge * edge entries) must name a listed
  // region. Throws InvariantViolation on inconsistent input.
  static RegionGraph from_parts(std::size_t edge, std::size_t bands, Connectivity connectivity,
                                std::size_t id_capacity, std::vector<Region> regions,
                                std::vector<RegionId> assignment);

  std::size_t edge() const noexcept { return edge_; }
  std::size_t width() const noexcept { return edge_; }
  std::size_t height() const noexcept { return edge_; }
  std::size_t bands() const noexcept { return bands_; }
  Connectivity connectivity() const noexcept { return connectivity_; }

  std::size_t live_count() const noexcept { return live_count_; }
  std::size_t id_capacity() const noexcept { return counts_.size(); }
  // Merges applied since construction; the step ordinal of the next merge.
  std::size_t merge_count() const noexcept { return merge_count_; }

  bool is_live(RegionId id) const noexcept { return id < counts_.size() && counts_[id] != 0; }
  RegionView region(RegionId id) const;
  std::vector<RegionId> live_ids() const;

  std::uint32_t pixel_count(RegionId id) const { return counts_[id]; }
  std::span<const double> band_sums(RegionId id) const {
    return {sums_.data() + static_cast<std::size_t>(id) * bands_, bands_};
  }
  std::span<const RegionId> adjacency(RegionId id) const { return adjacency_[id]; }
  std::span<const RegionId> assignment() const noexcept { return assignment_; }

  // Survivor is min(a, b); see merge_regions.
  MergeRecord merge(RegionId a, RegionId b, double dissimilarity, MergeKind kind);

  // Live regions renumbered densely in ascending id order, with
  // `remap[old_id]` giving the new id (kNoRegion for dead ids).
  RegionGraph compacted(std::vector<RegionId>* remap = nullptr) const;

  std::vector<Region> live_regions() const;

  // Structural equality; the merge counter is not compared.
  friend bool operator==(const RegionGraph& a, const RegionGraph& b);

 private:
  friend RegionGraph init_region_graph(const HyperImage&, Connectivity);
  friend RegionGraph init_from_presegmentation(const HyperImage&, const LabelMap&, Connectivity);
  friend RegionGraph stitch(const RegionGraph&, const RegionGraph&, const RegionGraph&,
                            const RegionGraph&);

  RegionGraph(std::size_t edge, std::size_t bands, Connectivity connectivity,
              std::size_t id_capacity);
  void link(RegionId a, RegionId b);

  std::size_t edge_ = 0;
  std::size_t bands_ = 0;
  Connectivity connectivity_ = Connectivity::Eight;
  std::size_t live_count_ = 0;
  std::size_t merge_count_ = 0;
  std::vector<std::uint32_t> counts_;
  std::vector<double> sums_;
  std::vector<std::vector<RegionId>> adjacency_;
  std::vector<RegionId> assignment_;
};

// One region per pixel, ids in row-major order.
RegionGraph init_region_graph(const HyperImage& image, Connectivity connectivity = Connectivity::Eight);

// One region per distinct label; ids are the labels renumbered densely by
// first row-major occurrence.
RegionGraph init_from_presegmentation(const HyperImage& image, const LabelMap& labels,
                                      Connectivity connectivity = Connectivity::Eight);

MergeRecord merge_regions(RegionGraph& graph, RegionId a, RegionId b, double dissimilarity,
                          MergeKind kind);

// Replays the hierarchy prefix onto `initial` until `at_region_count`
// regions remain. Labels are dense, ordered by first row-major occurrence.
LabelMap extract_labels(const MergeHierarchy& hierarchy, const RegionGraph& initial,
                        std::size_t at_region_count);

// Current assignment of `graph`, densely renumbered.
LabelMap current_labels(const RegionGraph& graph);

// Dense renumbering by first occurrence of an arbitrary id field.
LabelMap canonical_labels(std::size_t width, std::size_t height, std::span<const RegionId> ids);

// Throws InvariantViolation unless counts, assignment and adjacency symmetry
// are consistent.
void check_invariants(const RegionGraph& graph);

// Per-band sums over all live regions, accumulated in ascending id order.
std::vector<double> band_totals(const RegionGraph& graph);

// Per-band sums of an image's samples, accumulated in row-major order.
std::vector<double> band_totals(const HyperImage& image);

}  // namespace rhseg
