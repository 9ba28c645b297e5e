#include <chrono>
#include <random>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "rhseg/error.hpp"
#include "rhseg/hybrid.hpp"
#include "support/oracle.hpp"

using namespace rhseg;
using rhseg::testing::random_image;

namespace {

struct Fixture {
  HyperImage image;
  RhsegParams params;
  RhsegOutput reference;
};

Fixture make_fixture(std::size_t edge, std::size_t bands, std::size_t levels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Fixture f{random_image(rng, edge, bands, false), {}, {}};
  f.params.levels = levels;
  f.params.hseg.target_regions = 4;
  f.params.section_target = 8;
  f.reference = rhseg_run(f.image, f.params);
  return f;
}

void check_same(const RhsegOutput& out, const RhsegOutput& ref) {
  CHECK(out.logs == ref.logs);
  CHECK(out.labels == ref.labels);
  CHECK(out.final_graph == ref.final_graph);
  CHECK(out.root_initial == ref.root_initial);
  CHECK(out.combine_events == ref.combine_events);
}

std::size_t count(const std::vector<ExecutorEvent>& events, EventKind kind) {
  std::size_t n = 0;
  for (const auto& e : events) n += e.kind == kind;
  return n;
}

}  // namespace

TEST_CASE("hybrid executor configuration") {
  WorkerPoolConfig cfg;
  cfg.scalar_workers = 0;
  cfg.fast_worker = false;
  CHECK_THROWS_AS(HybridExecutor{cfg}, Error);
  cfg.fast_worker = true;
  cfg.fast_threads = 0;
  CHECK_THROWS_AS(HybridExecutor{cfg}, Error);
}

TEST_CASE("hybrid results match the sequential executor") {
  const Fixture f = make_fixture(16, 3, 3, 17);

  SUBCASE("fast worker only") {
    WorkerPoolConfig cfg;
    cfg.scalar_workers = 0;
    cfg.fast_threads = 2;
    HybridExecutor ex(cfg);
    check_same(rhseg_run(f.image, f.params, ex), f.reference);
    CHECK(ex.stats().fast_sections == 21);
    CHECK(ex.stats().migrations == 0);
  }
  SUBCASE("scalar workers only") {
    WorkerPoolConfig cfg;
    cfg.scalar_workers = 3;
    cfg.fast_worker = false;
    HybridExecutor ex(cfg);
    check_same(rhseg_run(f.image, f.params, ex), f.reference);
    CHECK(ex.stats().fast_sections == 0);
  }
  SUBCASE("every scalar count with migration on and off") {
    for (std::size_t c : {1u, 3u, 7u}) {
      for (bool migration : {true, false}) {
        WorkerPoolConfig cfg;
        cfg.scalar_workers = c;
        cfg.migration_enabled = migration;
        HybridExecutor ex(cfg);
        check_same(rhseg_run(f.image, f.params, ex), f.reference);
        const auto events = ex.events();
        CHECK(count(events, EventKind::Combine) == 5);
        CHECK(count(events, EventKind::Finish) == 21);
        if (!migration) CHECK(ex.stats().migrations == 0);
      }
    }
  }
  SUBCASE("single section on many scalar workers") {
    Fixture g = make_fixture(8, 2, 1, 3);
    WorkerPoolConfig cfg;
    cfg.scalar_workers = 4;
    HybridExecutor ex(cfg);
    check_same(rhseg_run(g.image, g.params, ex), g.reference);
    CHECK(count(ex.events(), EventKind::Finish) == 1);
    CHECK(count(ex.events(), EventKind::Combine) == 0);
  }
}

TEST_CASE("slow scalar workers get their sections migrated") {
  const Fixture f = make_fixture(32, 2, 2, 5);
  WorkerPoolConfig cfg;
  cfg.scalar_workers = 3;
  HybridHooks hooks;
  hooks.on_scalar_step = [](const SectionId&, std::size_t) {
    std::this_thread::sleep_for(std::chrono::microseconds(300));
  };
  HybridExecutor ex(cfg, hooks);
  check_same(rhseg_run(f.image, f.params, ex), f.reference);
  const HybridStats stats = ex.stats();
  CHECK(stats.migrations >= 1);
  CHECK(stats.fast_sections > 1);

  const auto events = ex.events();
  CHECK(count(events, EventKind::Migrate) == stats.migrations);
  // Every migrated section finishes on the fast worker.
  for (const auto& e : events) {
    if (e.kind != EventKind::Migrate) continue;
    CHECK(e.worker.rfind("scalar-", 0) == 0);
    bool finished_fast = false;
    for (const auto& g : events) {
      finished_fast |= g.kind == EventKind::Finish && g.section == e.section && g.worker == "fast";
    }
    CHECK(finished_fast);
  }
}

TEST_CASE("worker faults") {
  const Fixture f = make_fixture(16, 2, 2, 8);
  SUBCASE("a section failing once is re-queued") {
    HybridHooks hooks;
    hooks.inject_fault = [](const SectionId& id, std::string_view, std::size_t attempt) {
      return id == SectionId{2, 1, 0} && attempt == 0;
    };
    WorkerPoolConfig cfg;
    cfg.scalar_workers = 2;
    HybridExecutor ex(cfg, hooks);
    check_same(rhseg_run(f.image, f.params, ex), f.reference);
    CHECK(ex.stats().requeued == 1);
  }
  SUBCASE("a section failing twice fails the run") {
    HybridHooks hooks;
    hooks.inject_fault = [](const SectionId& id, std::string_view, std::size_t) {
      return id == SectionId{2, 0, 1};
    };
    WorkerPoolConfig cfg;
    cfg.scalar_workers = 2;
    HybridExecutor ex(cfg, hooks);
    try {
      (void)rhseg_run(f.image, f.params, ex);
      FAIL("expected WorkerPanic");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::WorkerPanic);
      CHECK(std::string(e.what()).find("2/0/1") != std::string::npos);
    }
  }
}

TEST_CASE("run_batch returns results in job order") {
  const Fixture f = make_fixture(16, 2, 3, 9);
  const Quadtree tree = partition(f.image, 3);
  std::vector<SectionJob> jobs;
  for (const auto& leaf : tree.leaves()) jobs.push_back(make_leaf_job(leaf, f.params));
  SequentialExecutor seq;
  const auto expected = seq.run_batch(jobs);
  WorkerPoolConfig cfg;
  cfg.scalar_workers = 3;
  HybridExecutor ex(cfg);
  const auto got = ex.run_batch(jobs);
  REQUIRE(got.size() == expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].id == expected[i].id);
    CHECK(got[i].merges == expected[i].merges);
    CHECK(got[i].graph == expected[i].graph);
  }
}

TEST_CASE("event log lines are JSON objects") {
  std::vector<ExecutorEvent> events{{EventKind::Start, SectionId{2, 0, 1}, "scalar-0", 10},
                                    {EventKind::Migrate, SectionId{2, 0, 1}, "scalar-0", 20},
                                    {EventKind::Combine, SectionId{1, 0, 0}, "controller", 30}};
  std::ostringstream out;
  write_event_log(out, events);
  std::istringstream in(out.str());
  std::string line;
  std::vector<nlohmann::json> parsed;
  while (std::getline(in, line)) parsed.push_back(nlohmann::json::parse(line));
  REQUIRE(parsed.size() == 3);
  CHECK(parsed[0]["event"] == "start");
  CHECK(parsed[0]["section_id"] == "2/0/1");
  CHECK(parsed[1]["event"] == "migrate");
  CHECK(parsed[2]["worker"] == "controller");
  CHECK(parsed[2]["wall_ns"] == 30);
}
