#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhseg/dissim.hpp"
#include "rhseg/region_graph.hpp"
#include "rhseg/worker_pool.hpp"

namespace rhseg {

inline constexpr double kDefaultSpectralWeight = 0.21;
inline constexpr std::size_t kDefaultTileK = 16;

struct HsegParams {
  double spectral_weight = kDefaultSpectralWeight;
  std::size_t target_regions = 2;
  std::string measure{SqrtBsmse::kName};

  // Throws InvalidArgument when out of range.
  void validate() const;
};

enum class StrategyKind : std::uint8_t { Sequential = 0, PerRegion = 1, PerPair = 2 };

struct SearchStrategy {
  StrategyKind kind = StrategyKind::Sequential;
  std::size_t tile_k = kDefaultTileK;

  static SearchStrategy sequential() { return {StrategyKind::Sequential, kDefaultTileK}; }
  static SearchStrategy per_region() { return {StrategyKind::PerRegion, kDefaultTileK}; }
  static SearchStrategy per_pair(std::size_t tile_k = kDefaultTileK) {
    return {StrategyKind::PerPair, tile_k};
  }

  friend bool operator==(const SearchStrategy&, const SearchStrategy&) = default;
};

// "seq", "per-region", "per-pair".
std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy_kind(std::string_view name);

enum class Stage { Adjacent, NonAdjacent };

inline constexpr double kNoDissim = std::numeric_limits<double>::infinity();

struct BestPairEntry {
  RegionId region = kNoRegion;
  RegionId partner = kNoRegion;
  double dissim = kNoDissim;

  friend bool operator==(const BestPairEntry&, const BestPairEntry&) = default;
};

// One entry per live region in ascending id order. The partner is the
// minimum-dissimilarity eligible candidate, ties to the smaller partner id.
struct BestPairTable {
  std::vector<BestPairEntry> entries;

  friend bool operator==(const BestPairTable&, const BestPairTable&) = default;
};

// Canonical pair: first < second.
struct PairCandidate {
  RegionId first = 0;
  RegionId second = 0;
  double dissim = 0.0;

  friend bool operator==(const PairCandidate&, const PairCandidate&) = default;
};

// Immutable per-step view of the live regions: compact index k maps to the
// k-th live id in ascending order. Means are derived from the stored sums.
class StepSnapshot {
 public:
  explicit StepSnapshot(const RegionGraph& graph);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t bands() const noexcept { return bands_; }
  RegionId id(std::size_t k) const noexcept { return ids_[k]; }
  double count(std::size_t k) const noexcept { return counts_[k]; }
  const double* means(std::size_t k) const noexcept { return means_.data() + k * bands_; }
  // Neighbors as ascending compact indices.
  std::span<const std::uint32_t> neighbors(std::size_t k) const noexcept {
    return {adjacency_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
  }

 private:
  std::size_t bands_ = 0;
  std::vector<RegionId> ids_;
  std::vector<double> counts_;
  std::vector<double> means_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> adjacency_;
};

BestPairTable search_sequential(const StepSnapshot& snap, Stage stage, const DissimMeasure& measure);
BestPairTable search_per_region(const StepSnapshot& snap, Stage stage, const DissimMeasure& measure,
                                WorkerPool& pool);
// The R x R pair matrix is cut into tile_k x tile_k tiles. Each task owns a
// row of tiles, stages the tile means locally, and folds its tile-local row
// minima with a pairwise tree ordered by tile index.
BestPairTable search_per_pair(const StepSnapshot& snap, Stage stage, const DissimMeasure& measure,
                              std::size_t tile_k, WorkerPool& pool);
BestPairTable search(const StepSnapshot& snap, Stage stage, const DissimMeasure& measure,
                     const SearchStrategy& strategy, WorkerPool& pool);

// Graph-level conveniences using the default measure.
BestPairTable parallel_search_per_region(const RegionGraph& graph, Stage stage, std::size_t workers);
BestPairTable parallel_search_per_pair(const RegionGraph& graph, Stage stage, std::size_t tile_k,
                                       std::size_t workers);

// Global minimum, ties broken by (first, second) lexicographically.
std::optional<PairCandidate> reduce_best(const BestPairTable& table);

std::optional<PairCandidate> best_adjacent_pair(const RegionGraph& graph,
                                                const SearchStrategy& strategy = {},
                                                std::size_t workers = 1);
std::optional<PairCandidate> best_nonadjacent_pair(const RegionGraph& graph,
                                                   const SearchStrategy& strategy = {},
                                                   std::size_t workers = 1);

struct MergeChoice {
  PairCandidate pair;
  MergeKind kind = MergeKind::Adjacent;
};

// The non-adjacent pair wins iff weight > 0 and its dissimilarity is strictly
// below weight times the best adjacent dissimilarity (infinite when absent).
std::optional<MergeChoice> choose_merge(const std::optional<PairCandidate>& adjacent,
                                        const std::optional<PairCandidate>& nonadjacent,
                                        double spectral_weight);

struct HsegProfile {
  std::uint64_t search_ns = 0;  // pair searches and reductions
  std::uint64_t total_ns = 0;
  std::size_t steps = 0;

  double search_fraction() const {
    return total_ns == 0 ? 0.0 : static_cast<double>(search_ns) / static_cast<double>(total_ns);
  }
  HsegProfile& operator+=(const HsegProfile& o) {
    search_ns += o.search_ns;
    total_ns += o.total_ns;
    steps += o.steps;
    return *this;
  }
};

struct HsegRun {
  MergeHierarchy hierarchy;
  bool converged_early = false;
  HsegProfile profile;
};

enum class RunStatus { ReachedTarget, Converged, Yielded };

class HsegEngine {
 public:
  HsegEngine(HsegParams params, SearchStrategy strategy, std::shared_ptr<WorkerPool> pool);
  HsegEngine(HsegParams params, SearchStrategy strategy = {}, std::size_t workers = 1);

  const HsegParams& params() const noexcept { return params_; }
  const SearchStrategy& strategy() const noexcept { return strategy_; }

  // One merge; nullopt when no eligible pair exists.
  std::optional<MergeRecord> step(RegionGraph& graph, HsegProfile* profile = nullptr);

  // Merges until params().target_regions remain or the graph converges.
  // `should_yield` is polled at every step boundary; returning true stops the
  // run with RunStatus::Yielded and leaves the graph resumable. Records are
  // appended to `log`.
  RunStatus run(RegionGraph& graph, MergeHierarchy& log, HsegProfile& profile,
                const std::function<bool()>& should_yield = {});

  HsegRun run(RegionGraph& graph);

 private:
  HsegParams params_;
  SearchStrategy strategy_;
  const DissimMeasure* measure_;
  std::shared_ptr<WorkerPool> pool_;
};

std::optional<MergeRecord> hseg_step(RegionGraph& graph, const HsegParams& params,
                                     const SearchStrategy& strategy = {}, std::size_t workers = 1);
HsegRun hseg_run(RegionGraph& graph, const HsegParams& params, const SearchStrategy& strategy = {},
                 std::size_t workers = 1);

}  // namespace rhseg
