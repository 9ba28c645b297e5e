#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "rhseg/net.hpp"
#include "rhseg/rhseg.hpp"
#include "rhseg/wire.hpp"

namespace rhseg {

// Runs one shipped section: 8-connected initial graph, HSEG to the section
// target with the requested strategy.
wire::ResultPayload process_assignment(const wire::AssignPayload& assign, std::size_t threads = 1);

struct WorkerServerConfig {
  net::Endpoint listen{"127.0.0.1", 0};
  std::size_t threads = 1;
  // Test hook: after this many assignments the worker drops the connection
  // on the next ASSIGN and stops serving, as if the process had died.
  std::optional<std::size_t> die_after_assignments;
};

// Serves one master connection at a time. Malformed frames close the
// connection; SHUTDOWN ends serve().
class WorkerServer {
 public:
  explicit WorkerServer(WorkerServerConfig config);

  std::uint16_t port() const noexcept { return listener_.port(); }
  net::Endpoint endpoint() const;

  // Returns true when stopped by SHUTDOWN.
  bool serve();
  // Stops accepting; a connection in progress is served to its end.
  void stop() noexcept;
  std::size_t assignments() const noexcept { return assignments_; }

 private:
  enum class Outcome { Closed, Shutdown, Died };
  Outcome handle(net::Connection& connection);

  WorkerServerConfig config_;
  net::Listener listener_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> assignments_{0};
};

struct ClusterConfig {
  std::vector<net::Endpoint> workers;
  SearchStrategy strategy;  // used on the master and sent with every assignment
  std::size_t local_threads = 1;
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds io_timeout{0};  // zero waits indefinitely
  bool shutdown_workers = false;
};

struct ClusterStats {
  std::size_t leaf_sections = 0;
  std::size_t local_sections = 0;  // computed on the master, including re-dispatched ones
  std::size_t assignments = 0;     // ASSIGN frames sent
  std::size_t results = 0;         // RESULT frames accepted
  std::size_t redispatched = 0;
  std::size_t quarantined = 0;
  std::size_t unreachable = 0;
  std::size_t combine_events = 0;
};

// Leaf sections go round-robin over the master and the remote workers; all
// upper levels run on the master. Remote results are checked by replaying
// their merge log before they are stitched.
class ClusterExecutor final : public SectionExecutor {
 public:
  explicit ClusterExecutor(ClusterConfig config);

  std::vector<SectionResult> run_batch(std::vector<SectionJob> jobs) override;
  TreeRun run_tree(const TreePlan& plan) override;

  ClusterStats stats() const;

 private:
  void serve_remote(std::size_t worker, const TreePlan& plan, const std::vector<std::size_t>& leaves,
                    std::vector<std::optional<SectionResult>>& results, std::vector<net::Connection>& keep);

  ClusterConfig config_;
  std::shared_ptr<WorkerPool> pool_;
  mutable std::mutex mutex_;
  ClusterStats stats_;
};

// Throws InvariantViolation when a remote result is not the outcome of its
// own merge log applied to the section's initial graph, or breaks
// conservation against the section's samples.
SectionResult validate_result(const SectionJob& job, const HyperImage& image, const wire::ResultPayload& result);

}  // namespace rhseg
