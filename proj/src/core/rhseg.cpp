#include "rhseg/rhseg.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <utility>

#include "rhseg/error.hpp"

namespace rhseg {
namespace {

std::size_t target_for(const SectionId& id, const RhsegParams& params) {
  return id.level == 1 ? params.hseg.target_regions : params.section_target_or_default();
}

// Deepest level first, then row-major.
bool log_order(const SectionResult& a, const SectionResult& b) {
  if (a.id.level != b.id.level) return a.id.level > b.id.level;
  return a.id < b.id;
}

}  // namespace

std::string SectionId::to_string() const {
  return std::to_string(level) + "/" + std::to_string(row) + "/" + std::to_string(col);
}

void RhsegParams::validate() const {
  if (levels < 1 || levels > 15) throw Error(ErrorKind::InvalidArgument, "levels must lie in [1, 15]");
  hseg.validate();
  if (section_target && *section_target < 1) {
    throw Error(ErrorKind::InvalidArgument, "section target must be >= 1");
  }
}

std::span<const SectionTask> Quadtree::level(std::size_t level) const {
  if (level < 1 || level > levels) throw Error(ErrorKind::LevelOutOfRange, "no such quadtree level");
  // Level l starts after 1 + 4 + ... + 4^(l-2) nodes.
  std::size_t begin = 0;
  for (std::size_t l = 1; l < level; ++l) begin += std::size_t{1} << (2 * (l - 1));
  const std::size_t count = std::size_t{1} << (2 * (level - 1));
  return std::span<const SectionTask>(sections).subspan(begin, count);
}

Quadtree partition(const HyperImage& image, std::size_t levels) {
  if (levels < 1 || levels > 15) throw Error(ErrorKind::InvalidArgument, "levels must lie in [1, 15]");
  const std::size_t per_side = std::size_t{1} << (levels - 1);
  if (image.edge() % per_side != 0) {
    throw Error(ErrorKind::IndivisibleImage, "edge " + std::to_string(image.edge()) +
                                                 " is not divisible by " + std::to_string(per_side));
  }
  Quadtree tree;
  tree.levels = levels;
  for (std::size_t level = 1; level <= levels; ++level) {
    const std::size_t side = std::size_t{1} << (level - 1);
    const std::size_t edge = image.edge() / side;
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        SectionTask task;
        task.id = SectionId{static_cast<std::uint8_t>(level), static_cast<std::uint16_t>(r),
                            static_cast<std::uint16_t>(c)};
        task.origin_row = r * edge;
        task.origin_col = c * edge;
        task.edge = edge;
        if (level == levels) task.image = image.crop(task.origin_row, task.origin_col, edge);
        tree.sections.push_back(std::move(task));
      }
    }
  }
  return tree;
}

SectionJob make_leaf_job(const SectionTask& leaf, const RhsegParams& params) {
  SectionJob job{leaf.id, init_region_graph(leaf.image, params.connectivity), params.hseg};
  job.params.target_regions = target_for(leaf.id, params);
  return job;
}

SectionJob combine_group(std::span<const SectionResult> siblings, const RhsegParams& params) {
  if (siblings.size() != 4) throw Error(ErrorKind::ShapeMismatch, "a combine needs exactly four sections");
  std::array<const SectionResult*, 4> quad{};
  const SectionId parent = siblings[0].id.parent();
  for (const SectionResult& s : siblings) {
    if (s.id.level < 2 || s.id.parent() != parent) {
      throw Error(ErrorKind::ShapeMismatch, "sections " + siblings[0].id.to_string() + " and " +
                                                s.id.to_string() + " are not siblings");
    }
    const std::size_t slot = (s.id.row % 2) * 2 + (s.id.col % 2);
    if (quad[slot]) throw Error(ErrorKind::ShapeMismatch, "duplicate sibling " + s.id.to_string());
    quad[slot] = &s;
  }
  SectionJob job{parent, stitch(quad[0]->graph, quad[1]->graph, quad[2]->graph, quad[3]->graph),
                 params.hseg};
  job.params.target_regions = target_for(parent, params);
  return job;
}

SectionResult run_section(SectionJob job, const SearchStrategy& strategy,
                          std::shared_ptr<WorkerPool> pool) {
  HsegEngine engine(job.params, strategy, std::move(pool));
  SectionResult result;
  result.id = job.id;
  if (job.id.level == 1) result.initial = job.graph;
  result.graph = std::move(job.graph);
  const HsegRun run = engine.run(result.graph);
  result.merges = run.hierarchy;
  result.converged_early = run.converged_early;
  result.profile = run.profile;
  return result;
}

TreeRun SectionExecutor::run_tree(const TreePlan& plan) {
  std::vector<SectionJob> jobs;
  jobs.reserve(plan.leaves.size());
  for (const SectionTask& leaf : plan.leaves) jobs.push_back(make_leaf_job(leaf, plan.params));
  return run_upper_levels(run_batch(std::move(jobs)), plan.params, *this);
}

TreeRun run_upper_levels(std::vector<SectionResult> current, const RhsegParams& params,
                         SectionExecutor& executor) {
  TreeRun run;
  while (!(current.size() == 1 && current.front().id.level == 1)) {
    std::map<SectionId, std::vector<SectionResult>> groups;
    for (SectionResult& s : current) {
      if (s.id.level < 2) throw Error(ErrorKind::ShapeMismatch, "unexpected root among children");
      groups[s.id.parent()].push_back(std::move(s));
    }
    std::vector<SectionJob> jobs;
    jobs.reserve(groups.size());
    for (auto& [parent, children] : groups) {
      jobs.push_back(combine_group(children, params));
      ++run.combine_events;
      for (SectionResult& child : children) {
        child.graph = RegionGraph();  // only the log is kept past stitching
        run.sections.push_back(std::move(child));
      }
    }
    current = executor.run_batch(std::move(jobs));
  }
  run.sections.push_back(std::move(current.front()));
  return run;
}

SequentialExecutor::SequentialExecutor(SearchStrategy strategy, std::size_t workers)
    : strategy_(strategy), pool_(std::make_shared<WorkerPool>(workers)) {}

std::vector<SectionResult> SequentialExecutor::run_batch(std::vector<SectionJob> jobs) {
  std::vector<SectionResult> out;
  out.reserve(jobs.size());
  for (SectionJob& job : jobs) out.push_back(run_section(std::move(job), strategy_, pool_));
  return out;
}

RhsegOutput assemble_output(TreeRun run) {
  std::sort(run.sections.begin(), run.sections.end(), log_order);
  if (run.sections.empty() || run.sections.back().id.level != 1) {
    throw Error(ErrorKind::InvariantViolation, "section tree has no root result");
  }
  RhsegOutput out;
  out.combine_events = run.combine_events;
  out.logs.reserve(run.sections.size());
  for (const SectionResult& s : run.sections) {
    out.logs.push_back(SectionLog{s.id, s.merges, s.converged_early});
    out.profile += s.profile;
  }
  SectionResult& root = run.sections.back();
  if (!root.initial) throw Error(ErrorKind::InvariantViolation, "root result lacks its initial graph");
  out.labels = current_labels(root.graph);
  out.final_graph = std::move(root.graph);
  out.root_initial = std::move(*root.initial);
  out.root_hierarchy = root.merges;
  out.converged_early = root.converged_early;
  return out;
}

RhsegOutput rhseg_run(const HyperImage& image, const RhsegParams& params, SectionExecutor& executor) {
  params.validate();
  Quadtree tree = partition(image, params.levels);
  TreePlan plan{params, {}};
  const auto leaves = tree.leaves();
  plan.leaves.assign(std::make_move_iterator(tree.sections.end() - static_cast<std::ptrdiff_t>(leaves.size())),
                     std::make_move_iterator(tree.sections.end()));
  const std::size_t leaf_count = plan.leaves.size();
  RhsegOutput out = assemble_output(executor.run_tree(plan));
  out.section_count = leaf_count;
  return out;
}

RhsegOutput rhseg_run(const HyperImage& image, const RhsegParams& params, const SearchStrategy& strategy,
                      std::size_t workers) {
  SequentialExecutor executor(strategy, workers);
  return rhseg_run(image, params, executor);
}

}  // namespace rhseg
