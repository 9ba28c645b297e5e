#include "rhseg/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>
#include <utility>

#include "rhseg/error.hpp"

namespace rhseg {
namespace {

void reject(const std::string& message) { throw Error(ErrorKind::InvariantViolation, message); }

}  // namespace

wire::ResultPayload process_assignment(const wire::AssignPayload& assign, std::size_t threads) {
  if (assign.edge == 0 || assign.bands == 0) throw Error(ErrorKind::InvalidArgument, "empty section");
  if (assign.strategy == StrategyKind::PerPair && assign.tile_k == 0) {
    throw Error(ErrorKind::InvalidArgument, "tile size must be >= 1");
  }
  HsegParams params;
  params.spectral_weight = assign.spectral_weight;
  params.target_regions = assign.section_target;
  params.validate();
  RegionGraph graph = init_region_graph(HyperImage(assign.edge, assign.bands, assign.samples));
  HsegEngine engine(params, SearchStrategy{assign.strategy, assign.tile_k}, threads);
  const HsegRun run = engine.run(graph);
  return wire::make_result(assign.section, run.hierarchy, graph);
}

WorkerServer::WorkerServer(WorkerServerConfig config)
    : config_(std::move(config)), listener_(config_.listen) {}

net::Endpoint WorkerServer::endpoint() const { return net::Endpoint{config_.listen.host, port()}; }

void WorkerServer::stop() noexcept {
  stopping_ = true;
  listener_.shutdown();
}

bool WorkerServer::serve() {
  while (!stopping_) {
    net::Connection connection;
    try {
      connection = listener_.accept();
    } catch (const Error&) {
      return false;
    }
    switch (handle(connection)) {
      case Outcome::Shutdown: return true;
      case Outcome::Died: return false;
      case Outcome::Closed: break;
    }
  }
  return false;
}

WorkerServer::Outcome WorkerServer::handle(net::Connection& connection) {
  using wire::MessageType;
  try {
    for (;;) {
      const wire::Message m = connection.receive();
      switch (m.type) {
        case MessageType::Hello:
          connection.send({MessageType::Hello, {}});
          break;
        case MessageType::Shutdown:
          return Outcome::Shutdown;
        case MessageType::Assign: {
          if (config_.die_after_assignments && assignments_ >= *config_.die_after_assignments) {
            connection.close();
            stopping_ = true;
            return Outcome::Died;
          }
          wire::Message reply;
          try {
            const wire::ResultPayload result = process_assignment(wire::decode_assign(m.payload), config_.threads);
            reply = {MessageType::Result, wire::encode_result(result)};
          } catch (const std::exception& e) {
            reply = {MessageType::Error, wire::encode_error(e.what())};
          }
          ++assignments_;
          connection.send(reply);
          break;
        }
        default:
          connection.send({MessageType::Error, wire::encode_error("unexpected message type")});
          break;
      }
    }
  } catch (const Error&) {
    return Outcome::Closed;
  }
}

SectionResult validate_result(const SectionJob& job, const HyperImage& image, const wire::ResultPayload& result) {
  if (result.section != job.id) {
    reject("result for " + result.section.to_string() + " answers " + job.id.to_string());
  }
  const std::size_t edge = image.edge();
  RegionGraph graph = wire::result_graph(result, edge, image.bands());

  RegionGraph replay = job.graph;
  try {
    for (const MergeRecord& m : result.merges) {
      if (m.survivor >= m.absorbed) reject("merge record does not keep the smaller id");
      const double d = sqrt_bsmse(replay.region(m.survivor), replay.region(m.absorbed));
      if (d != m.dissimilarity) reject("merge dissimilarity does not re-evaluate");
      replay.merge(m.survivor, m.absorbed, m.dissimilarity, m.kind);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvariantViolation) throw;
    reject(std::string("merge log does not replay: ") + e.what());
  }
  if (!(replay == graph)) reject("shipped graph differs from its replayed merge log");

  const auto totals = band_totals(graph);
  const auto expected = band_totals(image);
  for (std::size_t b = 0; b < totals.size(); ++b) {
    if (std::abs(totals[b] - expected[b]) > 1e-9 * std::max(1.0, std::abs(expected[b]))) {
      reject("band " + std::to_string(b) + " total is not conserved");
    }
  }
  const std::size_t target = job.params.target_regions;
  if (!result.merges.empty() && graph.live_count() < target) reject("section merged past its target");

  SectionResult out;
  out.id = job.id;
  out.merges = wire::result_hierarchy(result, edge);
  out.converged_early = graph.live_count() > target;
  out.graph = std::move(graph);
  return out;
}

ClusterExecutor::ClusterExecutor(ClusterConfig config)
    : config_(std::move(config)), pool_(std::make_shared<WorkerPool>(std::max<std::size_t>(1, config_.local_threads))) {}

ClusterStats ClusterExecutor::stats() const {
  std::lock_guard lk(mutex_);
  return stats_;
}

std::vector<SectionResult> ClusterExecutor::run_batch(std::vector<SectionJob> jobs) {
  std::vector<SectionResult> out;
  out.reserve(jobs.size());
  for (SectionJob& job : jobs) out.push_back(run_section(std::move(job), config_.strategy, pool_));
  return out;
}

void ClusterExecutor::serve_remote(std::size_t worker, const TreePlan& plan, const std::vector<std::size_t>& leaves,
                                   std::vector<std::optional<SectionResult>>& results,
                                   std::vector<net::Connection>& keep) {
  using wire::MessageType;
  auto count = [this](std::size_t ClusterStats::*field, std::size_t n = 1) {
    std::lock_guard lk(mutex_);
    stats_.*field += n;
  };

  net::Connection connection;
  try {
    connection = net::Connection::connect(config_.workers[worker], config_.connect_timeout);
    if (config_.io_timeout.count() > 0) connection.set_receive_timeout(config_.io_timeout);
    connection.send({MessageType::Hello, {}});
    if (connection.receive().type != MessageType::Hello) throw Error(ErrorKind::ProtocolError, "no HELLO reply");
  } catch (const Error&) {
    count(&ClusterStats::unreachable);
    count(&ClusterStats::redispatched, leaves.size());
    return;
  }

  for (std::size_t k : leaves) {
    if (!connection.is_open()) {
      count(&ClusterStats::redispatched);
      continue;
    }
    const SectionTask& leaf = plan.leaves[k];
    const SectionJob job = make_leaf_job(leaf, plan.params);
    wire::Message reply;
    try {
      connection.send({MessageType::Assign, wire::encode_assign(wire::make_assign(job, leaf.image, config_.strategy))});
      count(&ClusterStats::assignments);
      reply = connection.receive();
    } catch (const Error&) {
      connection.close();
      count(&ClusterStats::unreachable);
      count(&ClusterStats::redispatched);
      continue;
    }
    if (reply.type == MessageType::Error) {
      count(&ClusterStats::redispatched);
      continue;
    }
    try {
      if (reply.type != MessageType::Result) reject("unexpected reply to ASSIGN");
      results[k] = validate_result(job, leaf.image, wire::decode_result(reply.payload, leaf.edge, leaf.image.bands()));
      count(&ClusterStats::results);
    } catch (const Error&) {
      connection.close();
      count(&ClusterStats::quarantined);
      count(&ClusterStats::redispatched);
    }
  }
  if (connection.is_open()) keep[worker] = std::move(connection);
}

TreeRun ClusterExecutor::run_tree(const TreePlan& plan) {
  if (!config_.workers.empty()) {
    if (plan.params.connectivity != Connectivity::Eight) {
      throw Error(ErrorKind::InvalidArgument, "remote workers build 8-connected graphs only");
    }
    if (plan.params.hseg.measure != SqrtBsmse::kName) {
      throw Error(ErrorKind::InvalidArgument, "remote workers evaluate " + std::string(SqrtBsmse::kName) + " only");
    }
  }
  {
    std::lock_guard lk(mutex_);
    stats_ = {};
    stats_.leaf_sections = plan.leaves.size();
  }

  const std::size_t slots = 1 + config_.workers.size();
  std::vector<std::size_t> local;
  std::vector<std::vector<std::size_t>> remote(config_.workers.size());
  for (std::size_t i = 0; i < plan.leaves.size(); ++i) {
    const std::size_t slot = i % slots;
    (slot == 0 ? local : remote[slot - 1]).push_back(i);
  }

  std::vector<std::optional<SectionResult>> results(plan.leaves.size());
  std::vector<net::Connection> keep(config_.workers.size());
  {
    std::vector<std::jthread> handlers;
    for (std::size_t w = 0; w < remote.size(); ++w) {
      if (remote[w].empty()) continue;
      handlers.emplace_back([&, w] { serve_remote(w, plan, remote[w], results, keep); });
    }
    for (std::size_t k : local) {
      results[k] = run_section(make_leaf_job(plan.leaves[k], plan.params), config_.strategy, pool_);
    }
  }
  std::size_t computed_here = local.size();
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (results[k]) continue;
    results[k] = run_section(make_leaf_job(plan.leaves[k], plan.params), config_.strategy, pool_);
    ++computed_here;
  }

  std::vector<SectionResult> leaves;
  leaves.reserve(results.size());
  for (auto& r : results) leaves.push_back(std::move(*r));
  TreeRun run = run_upper_levels(std::move(leaves), plan.params, *this);

  if (config_.shutdown_workers) {
    for (std::size_t w = 0; w < keep.size(); ++w) {
      try {
        if (!keep[w].is_open()) keep[w] = net::Connection::connect(config_.workers[w], config_.connect_timeout);
        keep[w].send({wire::MessageType::Shutdown, {}});
      } catch (const Error&) {
        // already gone
      }
    }
  }
  std::lock_guard lk(mutex_);
  stats_.local_sections = computed_here;
  stats_.combine_events = run.combine_events;
  return run;
}

}  // namespace rhseg
