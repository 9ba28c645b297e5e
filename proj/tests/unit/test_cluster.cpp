#include <memory>
#include <random>
#include <thread>

#include "doctest.h"
#include "rhseg/cluster.hpp"
#include "rhseg/error.hpp"
#include "support/loopback.hpp"
#include "support/oracle.hpp"

using namespace rhseg;
using rhseg::testing::LoopbackWorkers;

namespace {

struct Case {
  HyperImage image;
  RhsegParams params;
  RhsegOutput reference;
};

Case make_case(std::size_t edge, std::size_t levels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Case c{rhseg::testing::random_image(rng, edge, 3, false), {}, {}};
  c.params.levels = levels;
  c.params.hseg.target_regions = 4;
  c.params.section_target = 6;
  c.reference = rhseg_run(c.image, c.params);
  return c;
}

void check_same(const RhsegOutput& out, const RhsegOutput& ref) {
  CHECK(out.logs == ref.logs);
  CHECK(out.labels == ref.labels);
  CHECK(out.final_graph == ref.final_graph);
  CHECK(out.root_initial == ref.root_initial);
}

}  // namespace

TEST_CASE("endpoint parsing") {
  CHECK(net::Endpoint::parse("127.0.0.1:5000") == net::Endpoint{"127.0.0.1", 5000});
  CHECK(net::Endpoint::parse("[::1]:80") == net::Endpoint{"::1", 80});
  CHECK(net::Endpoint::parse("node-3:7") .to_string() == "node-3:7");
  CHECK_THROWS_AS(net::Endpoint::parse("host"), Error);
  CHECK_THROWS_AS(net::Endpoint::parse("host:"), Error);
  CHECK_THROWS_AS(net::Endpoint::parse("host:70000"), Error);
  CHECK_THROWS_AS(net::Endpoint::parse("host:12a"), Error);
}

TEST_CASE("cluster outputs match the sequential executor for any worker count") {
  const Case c = make_case(16, 3, 71);
  for (std::size_t n : {0u, 1u, 4u, 8u, 16u}) {
    LoopbackWorkers workers(n);
    ClusterConfig cfg;
    cfg.workers = workers.endpoints();
    cfg.strategy = SearchStrategy::per_pair(4);
    ClusterExecutor ex(cfg);
    check_same(rhseg_run(c.image, c.params, ex), c.reference);
    const ClusterStats s = ex.stats();
    CHECK(s.leaf_sections == 16);
    CHECK(s.results + s.local_sections == 16);
    CHECK(s.local_sections == (16 + n) / (n + 1));
    CHECK(s.assignments == 16 - s.local_sections);
    CHECK(s.combine_events == 5);
    CHECK(s.redispatched == 0);
  }
}

TEST_CASE("a worker dying mid-run does not change the output") {
  const Case c = make_case(16, 3, 72);
  WorkerServerConfig dying;
  dying.die_after_assignments = 1;
  LoopbackWorkers workers(2, dying);
  ClusterConfig cfg;
  cfg.workers = workers.endpoints();
  ClusterExecutor ex(cfg);
  check_same(rhseg_run(c.image, c.params, ex), c.reference);
  const ClusterStats s = ex.stats();
  CHECK(s.results == 2);
  CHECK(s.redispatched == 16 - 6 - 2);
  CHECK(s.local_sections == 14);
}

TEST_CASE("unreachable workers fall back to the master") {
  const Case c = make_case(8, 2, 73);
  std::uint16_t closed_port = 0;
  {
    net::Listener probe(net::Endpoint{"127.0.0.1", 0});
    closed_port = probe.port();
  }
  ClusterConfig cfg;
  cfg.workers = {net::Endpoint{"127.0.0.1", closed_port}};
  ClusterExecutor ex(cfg);
  check_same(rhseg_run(c.image, c.params, ex), c.reference);
  CHECK(ex.stats().unreachable == 1);
  CHECK(ex.stats().local_sections == 4);
}

TEST_CASE("tampered results are quarantined and recomputed") {
  const Case c = make_case(8, 2, 74);
  net::Listener listener(net::Endpoint{"127.0.0.1", 0});
  std::thread liar([&] {
    try {
      net::Connection conn = listener.accept();
      for (;;) {
        const wire::Message m = conn.receive();
        if (m.type == wire::MessageType::Hello) {
          conn.send({wire::MessageType::Hello, {}});
          continue;
        }
        const wire::AssignPayload a = wire::decode_assign(m.payload);
        wire::ResultPayload r = process_assignment(a);
        r.merges.front().dissimilarity += 1.0;
        conn.send({wire::MessageType::Result, wire::encode_result(r)});
      }
    } catch (const Error&) {
    }
  });
  ClusterConfig cfg;
  cfg.workers = {net::Endpoint{"127.0.0.1", listener.port()}};
  ClusterExecutor ex(cfg);
  check_same(rhseg_run(c.image, c.params, ex), c.reference);
  liar.join();
  CHECK(ex.stats().quarantined == 1);
  CHECK(ex.stats().results == 0);
  CHECK(ex.stats().local_sections == 4);
}

TEST_CASE("validate_result") {
  std::mt19937_64 rng(75);
  const HyperImage img = rhseg::testing::random_image(rng, 4, 2, false);
  SectionJob job{SectionId{2, 0, 0}, init_region_graph(img), HsegParams{}};
  job.params.target_regions = 3;
  RegionGraph g = job.graph;
  const HsegRun run = hseg_run(g, job.params);
  const wire::ResultPayload good = wire::make_result(job.id, run.hierarchy, g);
  const SectionResult r = validate_result(job, img, good);
  CHECK(r.graph == g);
  CHECK(r.merges == run.hierarchy);

  wire::ResultPayload bad = good;
  bad.section.col = 1;
  CHECK_THROWS_AS(validate_result(job, img, bad), Error);
  bad = good;
  bad.merges.pop_back();
  CHECK_THROWS_AS(validate_result(job, img, bad), Error);
  bad = good;
  bad.regions.front().band_sums.front() += 1.0;
  CHECK_THROWS_AS(validate_result(job, img, bad), Error);
  bad = good;
  std::swap(bad.merges.front().survivor, bad.merges.front().absorbed);
  CHECK_THROWS_AS(validate_result(job, img, bad), Error);
}

TEST_CASE("worker server") {
  SUBCASE("SHUTDOWN ends serving cleanly") {
    WorkerServer server(WorkerServerConfig{});
    bool by_shutdown = false;
    std::thread t([&] { by_shutdown = server.serve(); });
    net::Connection conn = net::Connection::connect(server.endpoint(), std::chrono::milliseconds(2000));
    conn.send({wire::MessageType::Hello, {}});
    CHECK(conn.receive().type == wire::MessageType::Hello);
    conn.send({wire::MessageType::Shutdown, {}});
    t.join();
    CHECK(by_shutdown);
  }
  SUBCASE("bad assignments get an ERROR reply and the connection stays usable") {
    WorkerServer server(WorkerServerConfig{});
    std::thread t([&] { server.serve(); });
    net::Connection conn = net::Connection::connect(server.endpoint(), std::chrono::milliseconds(2000));
    conn.send({wire::MessageType::Assign, {1, 2, 3}});
    const wire::Message reply = conn.receive();
    CHECK(reply.type == wire::MessageType::Error);
    CHECK_FALSE(wire::decode_error(reply.payload).empty());
    conn.send({wire::MessageType::Hello, {}});
    CHECK(conn.receive().type == wire::MessageType::Hello);
    conn.send({wire::MessageType::Shutdown, {}});
    t.join();
  }
  SUBCASE("a malformed frame closes the connection") {
    WorkerServer server(WorkerServerConfig{});
    std::thread t([&] { server.serve(); });
    {
      net::Connection conn = net::Connection::connect(server.endpoint(), std::chrono::milliseconds(2000));
      conn.send({wire::MessageType::Hello, {}});
      CHECK(conn.receive().type == wire::MessageType::Hello);
      const std::vector<std::uint8_t> garbage{'J', 'U', 'N', 'K', 1, 1, 0, 0, 0, 0};
      conn.send_raw(garbage);
      CHECK_THROWS_AS(conn.receive(), Error);
    }
    server.stop();
    t.join();
  }
}

TEST_CASE("cluster rejects settings workers cannot honor") {
  const Case c = make_case(8, 2, 76);
  LoopbackWorkers workers(1);
  ClusterConfig cfg;
  cfg.workers = workers.endpoints();
  ClusterExecutor ex(cfg);
  RhsegParams p = c.params;
  p.connectivity = Connectivity::Four;
  CHECK_THROWS_AS(rhseg_run(c.image, p, ex), Error);
}
