#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rhseg/hseg.hpp"
#include "rhseg/image.hpp"
#include "rhseg/region_graph.hpp"

namespace rhseg {

// Quadtree node: level 1 is the whole image; level L tiles are the leaves.
struct SectionId {
  std::uint8_t level = 1;
  std::uint16_t row = 0;
  std::uint16_t col = 0;

  // Row-major index within the level.
  std::size_t index() const noexcept {
    return static_cast<std::size_t>(row) * (std::size_t{1} << (level - 1)) + col;
  }
  SectionId parent() const noexcept {
    return {static_cast<std::uint8_t>(level - 1), static_cast<std::uint16_t>(row / 2),
            static_cast<std::uint16_t>(col / 2)};
  }
  std::string to_string() const;

  auto operator<=>(const SectionId&) const = default;
};

struct RhsegParams {
  std::size_t levels = 1;
  HsegParams hseg;
  // Stopping count below the root; defaults to hseg.target_regions.
  std::optional<std::size_t> section_target;
  Connectivity connectivity = Connectivity::Eight;

  std::size_t section_target_or_default() const { return section_target.value_or(hseg.target_regions); }
  void validate() const;
};

struct SectionTask {
  SectionId id;
  std::size_t origin_row = 0;
  std::size_t origin_col = 0;
  std::size_t edge = 0;
  HyperImage image;  // populated for leaves only
};

// All 4^(L-1) + ... + 1 quadtree nodes, level-major (level 1 first) and
// row-major within a level.
struct Quadtree {
  std::size_t levels = 1;
  std::vector<SectionTask> sections;

  std::span<const SectionTask> level(std::size_t level) const;
  std::span<const SectionTask> leaves() const { return level(levels); }
};

// Throws IndivisibleImage if the edge is not divisible by 2^(L-1).
Quadtree partition(const HyperImage& image, std::size_t levels);

// Joins four equally sized quadrants (NW, NE, SW, SE) into one graph. Live
// regions are renumbered densely per quadrant in that order, and pixels on
// either side of an internal seam become adjacent under the quadrants'
// connectivity. No merges happen here.
RegionGraph stitch(const RegionGraph& nw, const RegionGraph& ne, const RegionGraph& sw,
                   const RegionGraph& se);

struct SectionJob {
  SectionId id;
  RegionGraph graph;
  HsegParams params;  // target_regions is the section's stopping count
};

struct SectionResult {
  SectionId id;
  RegionGraph graph;
  MergeHierarchy merges;
  bool converged_early = false;
  HsegProfile profile;
  std::optional<RegionGraph> initial;  // kept for the root only
};

struct TreePlan {
  RhsegParams params;
  std::vector<SectionTask> leaves;  // row-major
};

struct TreeRun {
  std::vector<SectionResult> sections;  // any order; exactly one root
  std::size_t combine_events = 0;
};

SectionJob make_leaf_job(const SectionTask& leaf, const RhsegParams& params);

// Stitches four finished siblings (any order) into the parent's job.
SectionJob combine_group(std::span<const SectionResult> siblings, const RhsegParams& params);

// Runs one section to its target on the given engine settings.
SectionResult run_section(SectionJob job, const SearchStrategy& strategy,
                          std::shared_ptr<WorkerPool> pool);

// Executes section jobs. Implementations differ in where and when jobs run;
// outputs depend only on the jobs.
class SectionExecutor {
 public:
  virtual ~SectionExecutor() = default;

  // Results are returned in job order.
  virtual std::vector<SectionResult> run_batch(std::vector<SectionJob> jobs) = 0;

  // Default: leaves as one batch, then each upper level as one batch.
  virtual TreeRun run_tree(const TreePlan& plan);
};

// Level-synchronous combine loop shared by executors that finish all leaves
// before moving up.
TreeRun run_upper_levels(std::vector<SectionResult> leaves, const RhsegParams& params,
                         SectionExecutor& executor);

class SequentialExecutor final : public SectionExecutor {
 public:
  explicit SequentialExecutor(SearchStrategy strategy = {}, std::size_t workers = 1);

  std::vector<SectionResult> run_batch(std::vector<SectionJob> jobs) override;

 private:
  SearchStrategy strategy_;
  std::shared_ptr<WorkerPool> pool_;
};

struct SectionLog {
  SectionId id;
  MergeHierarchy merges;
  bool converged_early = false;

  friend bool operator==(const SectionLog&, const SectionLog&) = default;
};

struct RhsegOutput {
  // Deepest level first, row-major within a level; the root log is last.
  std::vector<SectionLog> logs;
  RegionGraph final_graph;
  LabelMap labels;
  // Root graph before its HSEG pass and the root's own merges, from which
  // any region count between the two can be extracted.
  RegionGraph root_initial;
  MergeHierarchy root_hierarchy;
  bool converged_early = false;
  HsegProfile profile;
  std::size_t combine_events = 0;
  std::size_t section_count = 0;
};

RhsegOutput rhseg_run(const HyperImage& image, const RhsegParams& params, SectionExecutor& executor);
RhsegOutput rhseg_run(const HyperImage& image, const RhsegParams& params,
                      const SearchStrategy& strategy = {}, std::size_t workers = 1);

// Orders section results and derives labels; shared by all executors.
RhsegOutput assemble_output(TreeRun run);

}  // namespace rhseg
