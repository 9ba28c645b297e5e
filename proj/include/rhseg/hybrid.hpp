#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "rhseg/hseg.hpp"
#include "rhseg/rhseg.hpp"

namespace rhseg {

struct WorkerPoolConfig {
  std::size_t scalar_workers = 3;
  bool fast_worker = true;
  SearchStrategy fast_strategy = SearchStrategy::per_pair();
  std::size_t fast_threads = 1;  // threads inside the fast worker's search pool
  bool migration_enabled = true;

  // Throws InvalidArgument when no worker would exist.
  void validate() const;
};

enum class EventKind { Start, Finish, Migrate, Combine };

std::string_view to_string(EventKind kind);

struct ExecutorEvent {
  EventKind kind = EventKind::Start;
  SectionId section;
  std::string worker;  // "fast", "scalar-<i>", or "controller"
  std::uint64_t wall_ns = 0;
};

// One JSON object per line: {event, section_id, worker, wall_ns}.
void write_event_log(std::ostream& out, const std::vector<ExecutorEvent>& events);

struct HybridHooks {
  // Called on a scalar worker at every merge-step boundary, before the
  // migrate flag is read.
  std::function<void(const SectionId&, std::size_t worker)> on_scalar_step;
  // Returning true makes the worker fail the section with WorkerPanic.
  std::function<bool(const SectionId&, std::string_view worker, std::size_t attempt)> inject_fault;
};

struct HybridStats {
  std::size_t fast_sections = 0;  // sections the fast worker finished
  std::size_t migrations = 0;
  std::size_t requeued = 0;
};

// Section queue served by one fast worker (parallel search strategy) and C
// scalar workers (sequential strategy). When the fast worker finds the queue
// empty it asks the lowest running scalar section to hand over its graph at
// the next step boundary and continues it. Parents are stitched and enqueued
// as soon as their four children finish.
class HybridExecutor final : public SectionExecutor {
 public:
  explicit HybridExecutor(WorkerPoolConfig config, HybridHooks hooks = {});

  std::vector<SectionResult> run_batch(std::vector<SectionJob> jobs) override;
  TreeRun run_tree(const TreePlan& plan) override;

  const WorkerPoolConfig& config() const noexcept { return config_; }
  std::vector<ExecutorEvent> events() const;
  HybridStats stats() const;

 private:
  struct Run;

  WorkerPoolConfig config_;
  HybridHooks hooks_;
  mutable std::mutex log_mutex_;
  std::vector<ExecutorEvent> events_;
  HybridStats stats_;
};

}  // namespace rhseg
