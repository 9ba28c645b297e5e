#include "rhseg/region_graph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>

#include "rhseg/error.hpp"
#include "rhseg/rhseg.hpp"

namespace rhseg {
namespace {

struct Offset {
  int dr;
  int dc;
};

// Forward half of the neighborhood; each unordered pixel pair is visited once.
constexpr std::array<Offset, 4> kForward8{{{0, 1}, {1, -1}, {1, 0}, {1, 1}}};
constexpr std::array<Offset, 2> kForward4{{{0, 1}, {1, 0}}};

template <typename Fn>
void for_each_neighbor_pair(std::size_t edge, Connectivity connectivity, Fn&& fn) {
  const std::span<const Offset> offsets = connectivity == Connectivity::Eight
                                              ? std::span<const Offset>(kForward8)
                                              : std::span<const Offset>(kForward4);
  const auto n = static_cast<std::ptrdiff_t>(edge);
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    for (std::ptrdiff_t c = 0; c < n; ++c) {
      for (const Offset& o : offsets) {
        const std::ptrdiff_t rr = r + o.dr;
        const std::ptrdiff_t cc = c + o.dc;
        if (rr < 0 || rr >= n || cc < 0 || cc >= n) continue;
        fn(static_cast<std::size_t>(r * n + c), static_cast<std::size_t>(rr * n + cc));
      }
    }
  }
}

void insert_sorted(std::vector<RegionId>& set, RegionId id) {
  auto it = std::lower_bound(set.begin(), set.end(), id);
  if (it == set.end() || *it != id) set.insert(it, id);
}

void erase_sorted(std::vector<RegionId>& set, RegionId id) {
  auto it = std::lower_bound(set.begin(), set.end(), id);
  if (it != set.end() && *it == id) set.erase(it);
}

[[noreturn]] void violation(const std::string& what) {
  throw Error(ErrorKind::InvariantViolation, what);
}

}  // namespace

RegionGraph::RegionGraph(std::size_t edge, std::size_t bands, Connectivity connectivity,
                         std::size_t id_capacity)
    : edge_(edge),
      bands_(bands),
      connectivity_(connectivity),
      counts_(id_capacity, 0),
      sums_(id_capacity * bands, 0.0),
      adjacency_(id_capacity),
      assignment_(edge * edge, kNoRegion) {}

void RegionGraph::link(RegionId a, RegionId b) {
  if (a == b) return;
  insert_sorted(adjacency_[a], b);
  insert_sorted(adjacency_[b], a);
}

RegionGraph RegionGraph::from_parts(std::size_t edge, std::size_t bands, Connectivity connectivity,
                                    std::size_t id_capacity, std::vector<Region> regions,
                                    std::vector<RegionId> assignment) {
  if (assignment.size() != edge * edge) violation("assignment length does not match edge");
  RegionGraph g(edge, bands, connectivity, id_capacity);
  for (Region& r : regions) {
    if (r.id >= id_capacity) violation("region id " + std::to_string(r.id) + " exceeds capacity");
    if (g.counts_[r.id] != 0) violation("duplicate region id " + std::to_string(r.id));
    if (r.pixel_count == 0) violation("region with zero pixels");
    if (r.band_sums.size() != bands) violation("band sum length mismatch");
    if (!std::is_sorted(r.adjacency.begin(), r.adjacency.end()) ||
        std::adjacent_find(r.adjacency.begin(), r.adjacency.end()) != r.adjacency.end()) {
      violation("adjacency of region " + std::to_string(r.id) + " is not a sorted set");
    }
    g.counts_[r.id] = r.pixel_count;
    std::copy(r.band_sums.begin(), r.band_sums.end(),
              g.sums_.begin() + static_cast<std::ptrdiff_t>(r.id * bands));
    g.adjacency_[r.id] = std::move(r.adjacency);
    ++g.live_count_;
  }
  g.assignment_ = std::move(assignment);
  check_invariants(g);
  return g;
}

RegionView RegionGraph::region(RegionId id) const {
  if (!is_live(id)) throw Error(ErrorKind::DeadRegion, "region " + std::to_string(id) + " is not live");
  return RegionView{id, counts_[id], band_sums(id), adjacency_[id]};
}

std::vector<RegionId> RegionGraph::live_ids() const {
  std::vector<RegionId> ids;
  ids.reserve(live_count_);
  for (RegionId id = 0; id < counts_.size(); ++id) {
    if (counts_[id] != 0) ids.push_back(id);
  }
  return ids;
}

std::vector<Region> RegionGraph::live_regions() const {
  std::vector<Region> out;
  out.reserve(live_count_);
  for (RegionId id : live_ids()) {
    const auto sums = band_sums(id);
    out.push_back(Region{id, counts_[id], {sums.begin(), sums.end()},
                         adjacency_[id]});
  }
  return out;
}

MergeRecord RegionGraph::merge(RegionId a, RegionId b, double dissimilarity, MergeKind kind) {
  if (a == b) throw Error(ErrorKind::SelfMerge, "cannot merge region " + std::to_string(a) + " with itself");
  if (!is_live(a)) throw Error(ErrorKind::DeadRegion, "region " + std::to_string(a) + " is not live");
  if (!is_live(b)) throw Error(ErrorKind::DeadRegion, "region " + std::to_string(b) + " is not live");

  const RegionId survivor = std::min(a, b);
  const RegionId absorbed = std::max(a, b);

  counts_[survivor] += counts_[absorbed];
  counts_[absorbed] = 0;
  double* dst = sums_.data() + static_cast<std::size_t>(survivor) * bands_;
  double* src = sums_.data() + static_cast<std::size_t>(absorbed) * bands_;
  for (std::size_t b_idx = 0; b_idx < bands_; ++b_idx) {
    dst[b_idx] += src[b_idx];
    src[b_idx] = 0.0;
  }

  std::vector<RegionId> merged;
  merged.reserve(adjacency_[survivor].size() + adjacency_[absorbed].size());
  std::set_union(adjacency_[survivor].begin(), adjacency_[survivor].end(),
                 adjacency_[absorbed].begin(), adjacency_[absorbed].end(),
                 std::back_inserter(merged));
  erase_sorted(merged, survivor);
  erase_sorted(merged, absorbed);

  for (RegionId n : adjacency_[absorbed]) {
    if (n == survivor) continue;
    erase_sorted(adjacency_[n], absorbed);
    insert_sorted(adjacency_[n], survivor);
  }
  adjacency_[survivor] = std::move(merged);
  adjacency_[absorbed].clear();
  adjacency_[absorbed].shrink_to_fit();

  for (RegionId& p : assignment_) {
    if (p == absorbed) p = survivor;
  }
  --live_count_;
  return MergeRecord{merge_count_++, survivor, absorbed, dissimilarity, kind};
}

RegionGraph RegionGraph::compacted(std::vector<RegionId>* remap) const {
  std::vector<RegionId> map(counts_.size(), kNoRegion);
  RegionId next = 0;
  for (RegionId id = 0; id < counts_.size(); ++id) {
    if (counts_[id] != 0) map[id] = next++;
  }
  RegionGraph g(edge_, bands_, connectivity_, next);
  for (RegionId id = 0; id < counts_.size(); ++id) {
    const RegionId nid = map[id];
    if (nid == kNoRegion) continue;
    g.counts_[nid] = counts_[id];
    const auto sums = band_sums(id);
    std::copy(sums.begin(), sums.end(), g.sums_.begin() + static_cast<std::ptrdiff_t>(nid * bands_));
    auto& adj = g.adjacency_[nid];
    adj.reserve(adjacency_[id].size());
    // The id map is monotone, so the mapped set stays sorted.
    for (RegionId n : adjacency_[id]) adj.push_back(map[n]);
  }
  for (std::size_t p = 0; p < assignment_.size(); ++p) g.assignment_[p] = map[assignment_[p]];
  g.live_count_ = next;
  if (remap) *remap = std::move(map);
  return g;
}

bool operator==(const RegionGraph& a, const RegionGraph& b) {
  return a.edge_ == b.edge_ && a.bands_ == b.bands_ && a.connectivity_ == b.connectivity_ &&
         a.live_count_ == b.live_count_ && a.counts_ == b.counts_ && a.sums_ == b.sums_ &&
         a.adjacency_ == b.adjacency_ && a.assignment_ == b.assignment_;
}

RegionGraph init_region_graph(const HyperImage& image, Connectivity connectivity) {
  const std::size_t edge = image.edge();
  const std::size_t bands = image.bands();
  const std::size_t pixels = image.pixel_count();
  RegionGraph g(edge, bands, connectivity, pixels);
  const auto samples = image.samples();
  for (std::size_t p = 0; p < pixels; ++p) {
    g.counts_[p] = 1;
    g.assignment_[p] = static_cast<RegionId>(p);
    for (std::size_t b = 0; b < bands; ++b) {
      g.sums_[p * bands + b] = static_cast<double>(samples[b * pixels + p]);
    }
  }
  for_each_neighbor_pair(edge, connectivity, [&](std::size_t p, std::size_t q) {
    g.link(static_cast<RegionId>(p), static_cast<RegionId>(q));
  });
  g.live_count_ = pixels;
  return g;
}

RegionGraph init_from_presegmentation(const HyperImage& image, const LabelMap& labels,
                                      Connectivity connectivity) {
  if (labels.width != image.width() || labels.height != image.height() ||
      labels.labels.size() != image.pixel_count()) {
    throw Error(ErrorKind::DimensionMismatch, "label map size does not match image");
  }
  const LabelMap dense = canonical_labels(labels.width, labels.height, labels.labels);
  const std::size_t regions =
      dense.labels.empty() ? 0 : *std::max_element(dense.labels.begin(), dense.labels.end()) + 1;

  const std::size_t bands = image.bands();
  const std::size_t pixels = image.pixel_count();
  RegionGraph g(image.edge(), bands, connectivity, regions);
  const auto samples = image.samples();
  for (std::size_t p = 0; p < pixels; ++p) {
    const RegionId id = dense.labels[p];
    g.assignment_[p] = id;
    ++g.counts_[id];
    for (std::size_t b = 0; b < bands; ++b) {
      g.sums_[id * bands + b] += static_cast<double>(samples[b * pixels + p]);
    }
  }
  for_each_neighbor_pair(image.edge(), connectivity, [&](std::size_t p, std::size_t q) {
    g.link(g.assignment_[p], g.assignment_[q]);
  });
  g.live_count_ = regions;
  return g;
}

RegionGraph stitch(const RegionGraph& nw, const RegionGraph& ne, const RegionGraph& sw,
                   const RegionGraph& se) {
  const std::array<const RegionGraph*, 4> parts{&nw, &ne, &sw, &se};
  for (const RegionGraph* q : parts) {
    if (q->edge() != nw.edge() || q->bands() != nw.bands() || q->connectivity() != nw.connectivity()) {
      throw Error(ErrorKind::ShapeMismatch, "quadrants differ in size, band count or connectivity");
    }
  }
  const std::size_t half = nw.edge();
  const std::size_t edge = 2 * half;
  const std::size_t bands = nw.bands();

  std::array<RegionGraph, 4> dense;
  std::array<RegionId, 4> offset{};
  std::size_t total = 0;
  for (std::size_t q = 0; q < 4; ++q) {
    dense[q] = parts[q]->compacted();
    offset[q] = static_cast<RegionId>(total);
    total += dense[q].live_count();
  }

  RegionGraph g(edge, bands, nw.connectivity(), total);
  for (std::size_t q = 0; q < 4; ++q) {
    const RegionGraph& src = dense[q];
    for (RegionId id = 0; id < src.live_count(); ++id) {
      const RegionId nid = id + offset[q];
      g.counts_[nid] = src.counts_[id];
      std::copy(src.sums_.begin() + static_cast<std::ptrdiff_t>(id * bands),
                src.sums_.begin() + static_cast<std::ptrdiff_t>((id + 1) * bands),
                g.sums_.begin() + static_cast<std::ptrdiff_t>(nid * bands));
      auto& adj = g.adjacency_[nid];
      adj.reserve(src.adjacency_[id].size());
      for (RegionId n : src.adjacency_[id]) adj.push_back(n + offset[q]);
    }
    const std::size_t row0 = (q / 2) * half;
    const std::size_t col0 = (q % 2) * half;
    for (std::size_t r = 0; r < half; ++r) {
      for (std::size_t c = 0; c < half; ++c) {
        g.assignment_[(row0 + r) * edge + col0 + c] = src.assignment_[r * half + c] + offset[q];
      }
    }
  }
  auto quadrant = [half, edge](std::size_t p) { return ((p / edge) >= half) * 2 + ((p % edge) >= half); };
  for_each_neighbor_pair(edge, g.connectivity_, [&](std::size_t p, std::size_t q) {
    if (quadrant(p) != quadrant(q)) g.link(g.assignment_[p], g.assignment_[q]);
  });
  g.live_count_ = total;
  return g;
}

MergeRecord merge_regions(RegionGraph& graph, RegionId a, RegionId b, double dissimilarity,
                          MergeKind kind) {
  return graph.merge(a, b, dissimilarity, kind);
}

LabelMap canonical_labels(std::size_t width, std::size_t height, std::span<const RegionId> ids) {
  if (ids.size() != width * height) {
    throw Error(ErrorKind::DimensionMismatch, "id field does not match dimensions");
  }
  LabelMap out{width, height, std::vector<std::uint32_t>(ids.size())};
  std::unordered_map<RegionId, std::uint32_t> dense;
  for (std::size_t p = 0; p < ids.size(); ++p) {
    auto [it, inserted] = dense.try_emplace(ids[p], static_cast<std::uint32_t>(dense.size()));
    out.labels[p] = it->second;
  }
  return out;
}

LabelMap current_labels(const RegionGraph& graph) {
  return canonical_labels(graph.width(), graph.height(), graph.assignment());
}

LabelMap extract_labels(const MergeHierarchy& hierarchy, const RegionGraph& initial,
                        std::size_t at_region_count) {
  const std::size_t start = hierarchy.initial_region_count;
  if (start != initial.live_count()) {
    throw Error(ErrorKind::DimensionMismatch, "hierarchy does not start from the given graph");
  }
  if (at_region_count > start || at_region_count < hierarchy.final_region_count()) {
    throw Error(ErrorKind::LevelOutOfRange,
                "region count " + std::to_string(at_region_count) + " outside [" +
                    std::to_string(hierarchy.final_region_count()) + ", " + std::to_string(start) + "]");
  }
  // Union-find over initial ids; the survivor is always the root.
  std::vector<RegionId> parent(initial.id_capacity());
  std::iota(parent.begin(), parent.end(), RegionId{0});
  auto find = [&](RegionId x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const std::size_t replay = start - at_region_count;
  for (std::size_t i = 0; i < replay; ++i) {
    const MergeRecord& m = hierarchy.records[i];
    if (m.survivor >= parent.size() || m.absorbed >= parent.size()) {
      throw Error(ErrorKind::InvariantViolation, "merge record references unknown region");
    }
    parent[find(m.absorbed)] = find(m.survivor);
  }
  std::vector<RegionId> ids(initial.assignment().begin(), initial.assignment().end());
  for (RegionId& id : ids) id = find(id);
  return canonical_labels(initial.width(), initial.height(), ids);
}

void check_invariants(const RegionGraph& g) {
  const std::size_t pixels = g.edge() * g.edge();
  if (g.assignment().size() != pixels) violation("assignment length mismatch");

  std::vector<std::uint64_t> seen(g.id_capacity(), 0);
  for (RegionId id : g.assignment()) {
    if (!g.is_live(id)) violation("pixel assigned to non-live region " + std::to_string(id));
    ++seen[id];
  }
  std::size_t live = 0;
  std::uint64_t total = 0;
  for (RegionId id = 0; id < g.id_capacity(); ++id) {
    if (!g.is_live(id)) {
      if (!g.adjacency(id).empty()) violation("dead region " + std::to_string(id) + " has adjacency");
      continue;
    }
    ++live;
    total += g.pixel_count(id);
    if (seen[id] != g.pixel_count(id)) {
      violation("region " + std::to_string(id) + " pixel count disagrees with assignment");
    }
    for (double s : g.band_sums(id)) {
      if (!std::isfinite(s)) violation("non-finite band sum in region " + std::to_string(id));
    }
    const auto adj = g.adjacency(id);
    for (std::size_t k = 0; k < adj.size(); ++k) {
      const RegionId n = adj[k];
      if (k > 0 && adj[k - 1] >= n) violation("adjacency not sorted for region " + std::to_string(id));
      if (n == id) violation("self adjacency on region " + std::to_string(id));
      if (!g.is_live(n)) violation("region " + std::to_string(id) + " adjacent to dead region");
      const auto back = g.adjacency(n);
      if (!std::binary_search(back.begin(), back.end(), id)) {
        violation("asymmetric adjacency " + std::to_string(id) + " -> " + std::to_string(n));
      }
    }
  }
  if (live != g.live_count()) violation("live count mismatch");
  if (total != pixels) violation("pixel conservation violated");
}

std::vector<double> band_totals(const RegionGraph& graph) {
  std::vector<double> totals(graph.bands(), 0.0);
  for (RegionId id = 0; id < graph.id_capacity(); ++id) {
    if (!graph.is_live(id)) continue;
    const auto sums = graph.band_sums(id);
    for (std::size_t b = 0; b < totals.size(); ++b) totals[b] += sums[b];
  }
  return totals;
}

std::vector<double> band_totals(const HyperImage& image) {
  std::vector<double> totals(image.bands(), 0.0);
  const auto samples = image.samples();
  const std::size_t plane = image.pixel_count();
  for (std::size_t b = 0; b < image.bands(); ++b) {
    for (std::size_t p = 0; p < plane; ++p) totals[b] += static_cast<double>(samples[b * plane + p]);
  }
  return totals;
}

}  // namespace rhseg
