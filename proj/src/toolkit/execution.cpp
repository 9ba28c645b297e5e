#include "rhseg/execution.hpp"

#include "rhseg/error.hpp"

namespace rhseg {
namespace {

std::string strategy_label(const SearchStrategy& s) {
  std::string out(to_string(s.kind));
  if (s.kind == StrategyKind::PerPair) out += "(k=" + std::to_string(s.tile_k) + ")";
  return out;
}

}  // namespace

std::string_view to_string(ExecutorKind kind) {
  switch (kind) {
    case ExecutorKind::Sequential: return "seq";
    case ExecutorKind::Hybrid: return "hybrid";
    case ExecutorKind::Cluster: return "cluster";
  }
  return "?";
}

ExecutorKind parse_executor_kind(std::string_view name) {
  if (name == "seq") return ExecutorKind::Sequential;
  if (name == "hybrid") return ExecutorKind::Hybrid;
  if (name == "cluster") return ExecutorKind::Cluster;
  throw Error(ErrorKind::InvalidArgument, "unknown executor '" + std::string(name) + "'");
}

std::string ExecutionConfig::label() const {
  switch (executor) {
    case ExecutorKind::Sequential: {
      std::string out = strategy_label(strategy);
      if (threads > 1) out += " x" + std::to_string(threads);
      return out;
    }
    case ExecutorKind::Hybrid: {
      std::string out = "hybrid C=" + std::to_string(scalar_workers) + " +fast " + strategy_label(strategy);
      if (threads > 1) out += " x" + std::to_string(threads);
      if (!migration) out += " no-migration";
      return out;
    }
    case ExecutorKind::Cluster:
      return "cluster x" + std::to_string(endpoints.size()) + " " + strategy_label(strategy);
  }
  return "?";
}

std::unique_ptr<SectionExecutor> make_executor(const ExecutionConfig& config, HybridHooks hooks) {
  switch (config.executor) {
    case ExecutorKind::Sequential:
      return std::make_unique<SequentialExecutor>(config.strategy, config.threads);
    case ExecutorKind::Hybrid: {
      WorkerPoolConfig cfg;
      cfg.scalar_workers = config.scalar_workers;
      cfg.fast_worker = true;
      // The fast worker always runs a parallel strategy; a sequential choice
      // falls back to the default tiled search.
      cfg.fast_strategy = config.strategy.kind == StrategyKind::Sequential ? SearchStrategy::per_pair(config.strategy.tile_k)
                                                                            : config.strategy;
      cfg.fast_threads = config.threads;
      cfg.migration_enabled = config.migration;
      return std::make_unique<HybridExecutor>(cfg, std::move(hooks));
    }
    case ExecutorKind::Cluster: {
      ClusterConfig cfg;
      cfg.workers = config.endpoints;
      cfg.strategy = config.strategy;
      cfg.local_threads = config.threads;
      cfg.shutdown_workers = config.shutdown_workers;
      return std::make_unique<ClusterExecutor>(cfg);
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown executor");
}

}  // namespace rhseg
