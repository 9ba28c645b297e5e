#include "rhseg/hybrid.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <thread>
#include <utility>

#include "json.hpp"

#include "rhseg/error.hpp"

namespace rhseg {

void WorkerPoolConfig::validate() const {
  if (scalar_workers == 0 && !fast_worker) {
    throw Error(ErrorKind::InvalidArgument, "the hybrid executor needs at least one worker");
  }
  if (fast_worker && fast_threads == 0) {
    throw Error(ErrorKind::InvalidArgument, "the fast worker needs at least one thread");
  }
  if (fast_worker && fast_strategy.kind == StrategyKind::PerPair && fast_strategy.tile_k == 0) {
    throw Error(ErrorKind::InvalidArgument, "tile size must be >= 1");
  }
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Start: return "start";
    case EventKind::Finish: return "finish";
    case EventKind::Migrate: return "migrate";
    case EventKind::Combine: return "combine";
  }
  return "?";
}

void write_event_log(std::ostream& out, const std::vector<ExecutorEvent>& events) {
  for (const ExecutorEvent& e : events) {
    nlohmann::ordered_json j;
    j["event"] = to_string(e.kind);
    j["section_id"] = e.section.to_string();
    j["worker"] = e.worker;
    j["wall_ns"] = e.wall_ns;
    out << j.dump() << '\n';
  }
}

struct HybridExecutor::Run {
  struct Partial {
    RegionGraph graph;
    MergeHierarchy log;
    HsegProfile profile;
  };
  struct Item {
    std::size_t tag = 0;
    SectionJob original;
    std::optional<Partial> partial;
    std::size_t attempts = 0;
  };
  struct Outcome {
    std::size_t tag = 0;
    SectionId id;
    std::optional<SectionResult> result;
    std::string error;
  };
  struct Slot {
    std::optional<SectionId> running;
    std::atomic<bool> migrate{false};
  };

  HybridExecutor& owner;
  const WorkerPoolConfig& cfg;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  std::mutex m;
  std::condition_variable cv;
  std::deque<Item> queue;
  std::optional<Item> handoff;
  std::vector<Slot> slots;
  std::optional<std::size_t> victim;
  std::deque<Outcome> outcomes;
  bool stop = false;
  std::vector<std::thread> threads;

  explicit Run(HybridExecutor& o) : owner(o), cfg(o.config_), slots(o.config_.scalar_workers) {
    {
      std::lock_guard lk(owner.log_mutex_);
      owner.events_.clear();
      owner.stats_ = {};
    }
    for (std::size_t i = 0; i < cfg.scalar_workers; ++i) threads.emplace_back([this, i] { scalar_loop(i); });
    if (cfg.fast_worker) threads.emplace_back([this] { fast_loop(); });
  }

  ~Run() {
    {
      std::lock_guard lk(m);
      stop = true;
    }
    cv.notify_all();
    for (std::thread& t : threads) t.join();
  }

  void record(EventKind kind, const SectionId& id, std::string worker) {
    const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0);
    std::lock_guard lk(owner.log_mutex_);
    owner.events_.push_back(ExecutorEvent{kind, id, std::move(worker), static_cast<std::uint64_t>(ns.count())});
  }

  void submit(std::size_t tag, SectionJob job) {
    {
      std::lock_guard lk(m);
      queue.push_back(Item{tag, std::move(job), std::nullopt, 0});
    }
    cv.notify_all();
  }

  Outcome next_outcome() {
    std::unique_lock lk(m);
    cv.wait(lk, [this] { return !outcomes.empty(); });
    Outcome o = std::move(outcomes.front());
    outcomes.pop_front();
    return o;
  }

  // Caller holds m.
  void release_slot(std::optional<std::size_t> slot) {
    if (!slot) return;
    slots[*slot].running.reset();
    slots[*slot].migrate = false;
    if (victim == slot) victim.reset();
  }

  void scalar_loop(std::size_t index) {
    const std::string name = "scalar-" + std::to_string(index);
    auto pool = std::make_shared<WorkerPool>(1);
    for (;;) {
      Item item;
      {
        std::unique_lock lk(m);
        cv.wait(lk, [this] { return stop || !queue.empty(); });
        if (stop) return;
        item = std::move(queue.front());
        queue.pop_front();
        slots[index].running = item.original.id;
        slots[index].migrate = false;
      }
      execute(std::move(item), name, SearchStrategy::sequential(), pool, index);
    }
  }

  void fast_loop() {
    auto pool = std::make_shared<WorkerPool>(cfg.fast_threads);
    for (;;) {
      Item item;
      {
        std::unique_lock lk(m);
        for (;;) {
          if (stop) return;
          if (handoff) {
            item = std::move(*handoff);
            handoff.reset();
            break;
          }
          if (!queue.empty()) {
            item = std::move(queue.front());
            queue.pop_front();
            break;
          }
          if (cfg.migration_enabled && !victim) {
            for (std::size_t i = 0; i < slots.size(); ++i) {
              if (slots[i].running && (!victim || *slots[i].running < *slots[*victim].running)) victim = i;
            }
            if (victim) slots[*victim].migrate = true;
          }
          cv.wait(lk);
        }
      }
      execute(std::move(item), "fast", cfg.fast_strategy, pool, std::nullopt);
    }
  }

  void execute(Item item, const std::string& worker, const SearchStrategy& strategy,
               const std::shared_ptr<WorkerPool>& pool, std::optional<std::size_t> slot) {
    const SectionId id = item.original.id;
    record(EventKind::Start, id, worker);
    try {
      if (owner.hooks_.inject_fault && owner.hooks_.inject_fault(id, worker, item.attempts)) {
        throw Error(ErrorKind::WorkerPanic, "injected fault on " + worker);
      }
      Partial state = item.partial ? std::move(*item.partial) : Partial{item.original.graph, {}, {}};
      item.partial.reset();
      HsegEngine engine(item.original.params, strategy, pool);
      std::function<bool()> should_yield;
      if (slot) {
        should_yield = [this, &id, s = *slot] {
          if (owner.hooks_.on_scalar_step) owner.hooks_.on_scalar_step(id, s);
          return slots[s].migrate.load();
        };
      }
      const RunStatus status = engine.run(state.graph, state.log, state.profile, should_yield);
      if (status == RunStatus::Yielded) {
        record(EventKind::Migrate, id, worker);
        {
          std::lock_guard lk(m);
          release_slot(slot);
          item.partial = std::move(state);
          handoff = std::move(item);
        }
        {
          std::lock_guard lk(owner.log_mutex_);
          ++owner.stats_.migrations;
        }
        cv.notify_all();
        return;
      }
      SectionResult result;
      result.id = id;
      result.graph = std::move(state.graph);
      result.merges = std::move(state.log);
      result.converged_early = status == RunStatus::Converged;
      result.profile = state.profile;
      if (id.level == 1) result.initial = std::move(item.original.graph);
      record(EventKind::Finish, id, worker);
      if (!slot) {
        std::lock_guard lk(owner.log_mutex_);
        ++owner.stats_.fast_sections;
      }
      {
        std::lock_guard lk(m);
        release_slot(slot);
        outcomes.push_back(Outcome{item.tag, id, std::move(result), {}});
      }
      cv.notify_all();
    } catch (const std::exception& e) {
      bool requeued = false;
      {
        std::lock_guard lk(m);
        release_slot(slot);
        if (item.attempts == 0) {
          item.attempts = 1;
          item.partial.reset();
          queue.push_back(std::move(item));
          requeued = true;
        } else {
          outcomes.push_back(Outcome{item.tag, id, std::nullopt, e.what()});
        }
      }
      if (requeued) {
        std::lock_guard lk(owner.log_mutex_);
        ++owner.stats_.requeued;
      }
      cv.notify_all();
    }
  }
};

namespace {

[[noreturn]] void fail(const SectionId& id, const std::string& message) {
  throw Error(ErrorKind::WorkerPanic, "section " + id.to_string() + " failed twice: " + message);
}

}  // namespace

HybridExecutor::HybridExecutor(WorkerPoolConfig config, HybridHooks hooks)
    : config_(std::move(config)), hooks_(std::move(hooks)) {
  config_.validate();
}

std::vector<SectionResult> HybridExecutor::run_batch(std::vector<SectionJob> jobs) {
  std::vector<std::optional<SectionResult>> slots(jobs.size());
  {
    Run run(*this);
    for (std::size_t i = 0; i < jobs.size(); ++i) run.submit(i, std::move(jobs[i]));
    for (std::size_t done = 0; done < slots.size(); ++done) {
      Run::Outcome o = run.next_outcome();
      if (!o.result) fail(o.id, o.error);
      slots[o.tag] = std::move(o.result);
    }
  }
  std::vector<SectionResult> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

TreeRun HybridExecutor::run_tree(const TreePlan& plan) {
  TreeRun out;
  Run run(*this);
  std::size_t pending = 0;
  for (const SectionTask& leaf : plan.leaves) {
    run.submit(pending, make_leaf_job(leaf, plan.params));
    ++pending;
  }

  std::map<SectionId, std::vector<SectionResult>> groups;
  while (pending > 0) {
    Run::Outcome o = run.next_outcome();
    --pending;
    if (!o.result) fail(o.id, o.error);
    SectionResult result = std::move(*o.result);
    if (result.id.level == 1) {
      out.sections.push_back(std::move(result));
      continue;
    }
    const SectionId parent = result.id.parent();
    auto& siblings = groups[parent];
    siblings.push_back(std::move(result));
    if (siblings.size() < 4) continue;

    SectionJob job = combine_group(siblings, plan.params);
    ++out.combine_events;
    run.record(EventKind::Combine, parent, "controller");
    for (SectionResult& child : siblings) {
      child.graph = RegionGraph();
      out.sections.push_back(std::move(child));
    }
    groups.erase(parent);
    run.submit(0, std::move(job));
    ++pending;
  }
  return out;
}

std::vector<ExecutorEvent> HybridExecutor::events() const {
  std::lock_guard lk(log_mutex_);
  return events_;
}

HybridStats HybridExecutor::stats() const {
  std::lock_guard lk(log_mutex_);
  return stats_;
}

}  // namespace rhseg
