#include "rhseg/hseg.hpp"

#include <algorithm>
#include <chrono>
#include <string>
#include <utility>

#include "rhseg/error.hpp"

namespace rhseg {
namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point since) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count());
}

constexpr std::uint32_t kNoIndex = std::numeric_limits<std::uint32_t>::max();

// Best candidate in compact-index space.
struct Cand {
  double dissim = kNoDissim;
  std::uint32_t partner = kNoIndex;
};

inline bool better(double d, std::uint32_t j, const Cand& best) {
  return d < best.dissim || (d == best.dissim && j < best.partner);
}

inline void offer(Cand& best, double d, std::uint32_t j) {
  if (better(d, j, best)) best = Cand{d, j};
}

inline Cand pick(const Cand& a, const Cand& b) { return better(b.dissim, b.partner, a) ? b : a; }

BestPairTable to_table(const StepSnapshot& snap, const std::vector<Cand>& rows) {
  BestPairTable table;
  table.entries.resize(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Cand& c = rows[k];
    table.entries[k] = BestPairEntry{snap.id(k), c.partner == kNoIndex ? kNoRegion : snap.id(c.partner),
                                     c.dissim};
  }
  return table;
}

// Dispatches once to a concrete kernel so the hot loops can inline it.
template <typename Body>
auto with_kernel(const DissimMeasure& measure, std::size_t bands, Body&& body) {
  if (dynamic_cast<const SqrtBsmse*>(&measure) != nullptr) {
    return body([bands](const double* mi, double ni, const double* mj, double nj) {
      return sqrt_bsmse_means(mi, ni, mj, nj, bands);
    });
  }
  return body([&measure, bands](const double* mi, double ni, const double* mj, double nj) {
    return measure.evaluate(mi, ni, mj, nj, bands);
  });
}

// Row i against every candidate j in [begin, end) under the stage's
// eligibility rule. `means_j(j)` supplies the column means.
template <typename Kernel, typename MeansOf>
void scan_row(const StepSnapshot& snap, Stage stage, std::uint32_t i, const double* mean_i,
              std::uint32_t begin, std::uint32_t end, Kernel& kernel, MeansOf&& means_j, Cand& best) {
  const auto nbrs = snap.neighbors(i);
  auto it = std::lower_bound(nbrs.begin(), nbrs.end(), begin);
  const double ni = snap.count(i);
  if (stage == Stage::Adjacent) {
    for (; it != nbrs.end() && *it < end; ++it) {
      const std::uint32_t j = *it;
      offer(best, kernel(mean_i, ni, means_j(j), snap.count(j)), j);
    }
    return;
  }
  for (std::uint32_t j = begin; j < end; ++j) {
    if (j == i) continue;
    while (it != nbrs.end() && *it < j) ++it;
    if (it != nbrs.end() && *it == j) continue;
    offer(best, kernel(mean_i, ni, means_j(j), snap.count(j)), j);
  }
}

}  // namespace

void HsegParams::validate() const {
  if (!(spectral_weight >= 0.0 && spectral_weight <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "spectral weight must lie in [0, 1]");
  }
  if (target_regions < 1) throw Error(ErrorKind::InvalidArgument, "target regions must be >= 1");
  (void)measure_by_name(measure);
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Sequential: return "seq";
    case StrategyKind::PerRegion: return "per-region";
    case StrategyKind::PerPair: return "per-pair";
  }
  return "?";
}

StrategyKind parse_strategy_kind(std::string_view name) {
  if (name == "seq" || name == "sequential") return StrategyKind::Sequential;
  if (name == "per-region") return StrategyKind::PerRegion;
  if (name == "per-pair") return StrategyKind::PerPair;
  throw Error(ErrorKind::InvalidArgument, "unknown strategy '" + std::string(name) + "'");
}

StepSnapshot::StepSnapshot(const RegionGraph& graph) : bands_(graph.bands()) {
  ids_ = graph.live_ids();
  const std::size_t n = ids_.size();
  std::vector<std::uint32_t> compact(graph.id_capacity(), kNoIndex);
  for (std::size_t k = 0; k < n; ++k) compact[ids_[k]] = static_cast<std::uint32_t>(k);

  counts_.resize(n);
  means_.resize(n * bands_);
  offsets_.resize(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const RegionId id = ids_[k];
    const double count = static_cast<double>(graph.pixel_count(id));
    counts_[k] = count;
    const auto sums = graph.band_sums(id);
    for (std::size_t b = 0; b < bands_; ++b) means_[k * bands_ + b] = sums[b] / count;
    offsets_[k + 1] = offsets_[k] + graph.adjacency(id).size();
  }
  adjacency_.resize(offsets_[n]);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pos = offsets_[k];
    for (RegionId nb : graph.adjacency(ids_[k])) adjacency_[pos++] = compact[nb];
  }
}

BestPairTable search_sequential(const StepSnapshot& snap, Stage stage, const DissimMeasure& measure) {
  const auto n = static_cast<std::uint32_t>(snap.size());
  std::vector<Cand> rows(n);
  with_kernel(measure, snap.bands(), [&](auto kernel) {
    // Upper triangle only; each evaluation updates both endpoints.
    for (std::uint32_t i = 0; i < n; ++i) {
      const double* mi = snap.means(i);
      const double ni = snap.count(i);
      const auto nbrs = snap.neighbors(i);
      auto it = std::upper_bound(nbrs.begin(), nbrs.end(), i);
      if (stage == Stage::Adjacent) {
        for (; it != nbrs.end(); ++it) {
          const std::uint32_t j = *it;
          const double d = kernel(mi, ni, snap.means(j), snap.count(j));
          offer(rows[i], d, j);
          offer(rows[j], d, i);
        }
        continue;
      }
      for (std::uint32_t j = i + 1; j < n; ++j) {
        while (it != nbrs.end() && *it < j) ++it;
        if (it != nbrs.end() && *it == j) continue;
        const double d = kernel(mi, ni, snap.means(j), snap.count(j));
        offer(rows[i], d, j);
        offer(rows[j], d, i);
      }
    }
  });
  return to_table(snap, rows);
}

BestPairTable search_per_region(const StepSnapshot& snap, Stage stage, const DissimMeasure& measure,
                                WorkerPool& pool) {
  const auto n = static_cast<std::uint32_t>(snap.size());
  std::vector<Cand> rows(n);
  with_kernel(measure, snap.bands(), [&](auto kernel) {
    pool.parallel_for(n, [&](std::size_t task) {
      const auto i = static_cast<std::uint32_t>(task);
      Cand best;
      scan_row(snap, stage, i, snap.means(i), 0, n, kernel,
               [&](std::uint32_t j) { return snap.means(j); }, best);
      rows[i] = best;
    });
  });
  return to_table(snap, rows);
}

BestPairTable search_per_pair(const StepSnapshot& snap, Stage stage, const DissimMeasure& measure,
                              std::size_t tile_k, WorkerPool& pool) {
  if (tile_k < 1) throw Error(ErrorKind::InvalidArgument, "tile_k must be >= 1");
  const std::size_t n = snap.size();
  const std::size_t bands = snap.bands();
  const std::size_t tiles = (n + tile_k - 1) / tile_k;
  std::vector<Cand> rows(n);

  with_kernel(measure, bands, [&](auto kernel) {
    pool.parallel_for(tiles, [&](std::size_t tile_row) {
      const std::size_t r0 = tile_row * tile_k;
      const std::size_t height = std::min(tile_k, n - r0);
      const bool staged = stage == Stage::NonAdjacent;

      std::vector<double> row_means;
      std::vector<double> col_means;
      if (staged) {
        row_means.assign(snap.means(r0), snap.means(r0) + height * bands);
        col_means.resize(tile_k * bands);
      }

      // Pairwise tree over tile results: slot L holds the fold of 2^L
      // consecutive tiles, like a binary counter.
      std::vector<std::vector<Cand>> slots;
      std::vector<bool> occupied;
      std::vector<Cand> tile(height);
      std::vector<Cand> carry;
      auto fold_into = [](std::vector<Cand>& dst, const std::vector<Cand>& src) {
        for (std::size_t a = 0; a < dst.size(); ++a) dst[a] = pick(dst[a], src[a]);
      };

      for (std::size_t tile_col = 0; tile_col < tiles; ++tile_col) {
        const std::size_t c0 = tile_col * tile_k;
        const std::size_t width = std::min(tile_k, n - c0);
        if (staged) std::copy(snap.means(c0), snap.means(c0) + width * bands, col_means.begin());
        std::fill(tile.begin(), tile.end(), Cand{});

        for (std::size_t a = 0; a < height; ++a) {
          const auto i = static_cast<std::uint32_t>(r0 + a);
          if (staged) {
            scan_row(snap, stage, i, row_means.data() + a * bands, static_cast<std::uint32_t>(c0),
                     static_cast<std::uint32_t>(c0 + width), kernel,
                     [&](std::uint32_t j) { return col_means.data() + (j - c0) * bands; }, tile[a]);
          } else {
            scan_row(snap, stage, i, snap.means(i), static_cast<std::uint32_t>(c0),
                     static_cast<std::uint32_t>(c0 + width), kernel,
                     [&](std::uint32_t j) { return snap.means(j); }, tile[a]);
          }
        }

        std::size_t level = 0;
        carry.swap(tile);
        while (level < slots.size() && occupied[level]) {
          fold_into(slots[level], carry);
          carry.swap(slots[level]);
          occupied[level] = false;
          ++level;
        }
        if (level == slots.size()) {
          slots.emplace_back();
          occupied.push_back(false);
        }
        slots[level].swap(carry);
        occupied[level] = true;
        tile.swap(carry);
        tile.resize(height);
      }

      std::vector<Cand> result(height);
      for (std::size_t level = slots.size(); level-- > 0;) {
        if (occupied[level]) fold_into(result, slots[level]);
      }
      std::copy(result.begin(), result.end(), rows.begin() + static_cast<std::ptrdiff_t>(r0));
    });
  });
  return to_table(snap, rows);
}

BestPairTable search(const StepSnapshot& snap, Stage stage, const DissimMeasure& measure,
                     const SearchStrategy& strategy, WorkerPool& pool) {
  switch (strategy.kind) {
    case StrategyKind::Sequential: return search_sequential(snap, stage, measure);
    case StrategyKind::PerRegion: return search_per_region(snap, stage, measure, pool);
    case StrategyKind::PerPair: return search_per_pair(snap, stage, measure, strategy.tile_k, pool);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown strategy");
}

BestPairTable parallel_search_per_region(const RegionGraph& graph, Stage stage, std::size_t workers) {
  WorkerPool pool(workers);
  return search_per_region(StepSnapshot(graph), stage, measure_by_name(SqrtBsmse::kName), pool);
}

BestPairTable parallel_search_per_pair(const RegionGraph& graph, Stage stage, std::size_t tile_k,
                                       std::size_t workers) {
  WorkerPool pool(workers);
  return search_per_pair(StepSnapshot(graph), stage, measure_by_name(SqrtBsmse::kName), tile_k, pool);
}

std::optional<PairCandidate> reduce_best(const BestPairTable& table) {
  std::optional<PairCandidate> best;
  for (const BestPairEntry& e : table.entries) {
    if (e.partner == kNoRegion) continue;
    const PairCandidate c{std::min(e.region, e.partner), std::max(e.region, e.partner), e.dissim};
    if (!best || c.dissim < best->dissim ||
        (c.dissim == best->dissim &&
         (c.first < best->first || (c.first == best->first && c.second < best->second)))) {
      best = c;
    }
  }
  return best;
}

namespace {

std::optional<PairCandidate> best_pair(const RegionGraph& graph, Stage stage,
                                       const SearchStrategy& strategy, std::size_t workers) {
  WorkerPool pool(workers);
  return reduce_best(
      search(StepSnapshot(graph), stage, measure_by_name(SqrtBsmse::kName), strategy, pool));
}

}  // namespace

std::optional<PairCandidate> best_adjacent_pair(const RegionGraph& graph, const SearchStrategy& strategy,
                                                std::size_t workers) {
  return best_pair(graph, Stage::Adjacent, strategy, workers);
}

std::optional<PairCandidate> best_nonadjacent_pair(const RegionGraph& graph,
                                                   const SearchStrategy& strategy, std::size_t workers) {
  return best_pair(graph, Stage::NonAdjacent, strategy, workers);
}

std::optional<MergeChoice> choose_merge(const std::optional<PairCandidate>& adjacent,
                                        const std::optional<PairCandidate>& nonadjacent,
                                        double spectral_weight) {
  const double threshold = adjacent ? spectral_weight * adjacent->dissim : kNoDissim;
  if (spectral_weight > 0.0 && nonadjacent && nonadjacent->dissim < threshold) {
    return MergeChoice{*nonadjacent, MergeKind::NonAdjacent};
  }
  if (adjacent) return MergeChoice{*adjacent, MergeKind::Adjacent};
  return std::nullopt;
}

HsegEngine::HsegEngine(HsegParams params, SearchStrategy strategy, std::shared_ptr<WorkerPool> pool)
    : params_(std::move(params)),
      strategy_(strategy),
      measure_(&measure_by_name(params_.measure)),
      pool_(pool ? std::move(pool) : std::make_shared<WorkerPool>(1)) {
  params_.validate();
  if (strategy_.tile_k < 1) throw Error(ErrorKind::InvalidArgument, "tile_k must be >= 1");
}

HsegEngine::HsegEngine(HsegParams params, SearchStrategy strategy, std::size_t workers)
    : HsegEngine(std::move(params), strategy, std::make_shared<WorkerPool>(workers)) {}

std::optional<MergeRecord> HsegEngine::step(RegionGraph& graph, HsegProfile* profile) {
  const StepSnapshot snap(graph);
  const auto t0 = Clock::now();
  const auto adjacent = reduce_best(search(snap, Stage::Adjacent, *measure_, strategy_, *pool_));
  std::optional<PairCandidate> nonadjacent;
  // A zero weight can never select the spectral stage, so it is skipped.
  if (params_.spectral_weight > 0.0) {
    nonadjacent = reduce_best(search(snap, Stage::NonAdjacent, *measure_, strategy_, *pool_));
  }
  if (profile) profile->search_ns += elapsed_ns(t0);

  const auto choice = choose_merge(adjacent, nonadjacent, params_.spectral_weight);
  if (!choice) return std::nullopt;
  return graph.merge(choice->pair.first, choice->pair.second, choice->pair.dissim, choice->kind);
}

RunStatus HsegEngine::run(RegionGraph& graph, MergeHierarchy& log, HsegProfile& profile,
                          const std::function<bool()>& should_yield) {
  const auto t0 = Clock::now();
  if (log.records.empty()) log.initial_region_count = graph.live_count();
  RunStatus status = RunStatus::ReachedTarget;
  while (graph.live_count() > params_.target_regions) {
    if (should_yield && should_yield()) {
      status = RunStatus::Yielded;
      break;
    }
    auto record = step(graph, &profile);
    if (!record) {
      status = RunStatus::Converged;
      break;
    }
    record->step = log.records.size();
    log.records.push_back(*record);
    ++profile.steps;
  }
  profile.total_ns += elapsed_ns(t0);
  return status;
}

HsegRun HsegEngine::run(RegionGraph& graph) {
  HsegRun out;
  out.hierarchy.initial_region_count = graph.live_count();
  out.converged_early = run(graph, out.hierarchy, out.profile) == RunStatus::Converged;
  return out;
}

std::optional<MergeRecord> hseg_step(RegionGraph& graph, const HsegParams& params,
                                     const SearchStrategy& strategy, std::size_t workers) {
  HsegEngine engine(params, strategy, workers);
  return engine.step(graph);
}

HsegRun hseg_run(RegionGraph& graph, const HsegParams& params, const SearchStrategy& strategy,
                 std::size_t workers) {
  HsegEngine engine(params, strategy, workers);
  return engine.run(graph);
}

}  // namespace rhseg
