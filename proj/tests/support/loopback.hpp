#pragma once

#include <memory>
#include <thread>
#include <vector>

#include "rhseg/cluster.hpp"

namespace rhseg::testing {

// In-process worker nodes listening on ephemeral loopback ports.
class LoopbackWorkers {
 public:
  explicit LoopbackWorkers(std::size_t count, WorkerServerConfig config = {}) {
    for (std::size_t i = 0; i < count; ++i) {
      servers_.push_back(std::make_unique<WorkerServer>(config));
      WorkerServer* s = servers_.back().get();
      threads_.emplace_back([s] { s->serve(); });
    }
  }
  ~LoopbackWorkers() {
    for (auto& s : servers_) s->stop();
    for (auto& t : threads_) t.join();
  }
  LoopbackWorkers(const LoopbackWorkers&) = delete;
  LoopbackWorkers& operator=(const LoopbackWorkers&) = delete;

  std::vector<net::Endpoint> endpoints() const {
    std::vector<net::Endpoint> out;
    for (const auto& s : servers_) out.push_back(s->endpoint());
    return out;
  }

 private:
  std::vector<std::unique_ptr<WorkerServer>> servers_;
  std::vector<std::thread> threads_;
};

}  // namespace rhseg::testing
