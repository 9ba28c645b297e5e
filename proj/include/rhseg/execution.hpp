#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rhseg/cluster.hpp"
#include "rhseg/hseg.hpp"
#include "rhseg/hybrid.hpp"
#include "rhseg/rhseg.hpp"

namespace rhseg {

enum class ExecutorKind { Sequential, Hybrid, Cluster };

std::string_view to_string(ExecutorKind kind);
// "seq", "hybrid", "cluster"; throws InvalidArgument.
ExecutorKind parse_executor_kind(std::string_view name);

// Everything that selects how a run executes, as opposed to what it
// computes.
struct ExecutionConfig {
  ExecutorKind executor = ExecutorKind::Sequential;
  SearchStrategy strategy;
  std::size_t threads = 1;          // search threads (fast worker's for hybrid)
  std::size_t scalar_workers = 3;   // hybrid
  bool migration = true;            // hybrid
  std::vector<net::Endpoint> endpoints;  // cluster
  bool shutdown_workers = false;         // cluster

  // e.g. "seq", "per-pair(k=4) x2", "hybrid C=3 +fast per-pair(k=16)", "cluster x4".
  std::string label() const;
};

std::unique_ptr<SectionExecutor> make_executor(const ExecutionConfig& config, HybridHooks hooks = {});

}  // namespace rhseg
