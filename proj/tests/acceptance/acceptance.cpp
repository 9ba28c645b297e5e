// Prints one line per acceptance criterion: PASS, FAIL, or N/A when the host
// cannot satisfy the criterion's precondition. Exits non-zero on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rhseg/accuracy.hpp"
#include "rhseg/cluster.hpp"
#include "rhseg/dissim.hpp"
#include "rhseg/error.hpp"
#include "rhseg/execution.hpp"
#include "rhseg/hseg.hpp"
#include "rhseg/labels_io.hpp"
#include "rhseg/merge_log.hpp"
#include "rhseg/rhseg.hpp"
#include "rhseg/synthetic.hpp"
#include "rhseg/wire.hpp"
#include "support/loopback.hpp"
#include "support/oracle.hpp"

using namespace rhseg;
using namespace rhseg::testing;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned thresholds.
constexpr std::size_t kOracleCases = 600;
constexpr double kOracleBudgetS = 120.0;
constexpr double kReproBudgetS = 600.0;
constexpr double kHandValueRelTol = 1e-12;
constexpr double kConservationRelTol = 1e-9;
constexpr double kDissimFractionMin = 0.90;
constexpr double kSpeedupMin = 1.8;
constexpr unsigned kSpeedupMinThreads = 4;
constexpr int kFuzzFrames = 10000;

enum class Verdict { Pass, Fail, NotApplicable };

struct Outcome {
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

Outcome pass(std::string d) { return {Verdict::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::Fail, std::move(d)}; }
Outcome judge(bool ok, std::string d) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(d)}; }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 3) {
  std::ostringstream s;
  s.precision(precision);
  s << std::fixed << v;
  return s.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// 1. Merge sequences of hseg_run against the brute-force oracle.
Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240611);
  const std::vector<SearchStrategy> strategies{SearchStrategy::sequential(), SearchStrategy::per_region(),
                                               SearchStrategy::per_pair(1), SearchStrategy::per_pair(2),
                                               SearchStrategy::per_pair(16)};
  const double weights[] = {0.0, 0.21, 0.5, 1.0};
  std::size_t runs = 0;
  std::size_t merges = 0;
  for (std::size_t c = 0; c < kOracleCases; ++c) {
    const std::size_t edge = 2 + c % 4;
    const std::size_t bands = 1 + (c / 4) % 3;
    const HyperImage img = random_image(rng, edge, bands, c % 3 == 0);
    HsegParams params;
    params.spectral_weight = c % 5 == 0 ? kDefaultSpectralWeight : weights[rng() % 4];
    params.target_regions = 1 + rng() % (edge * edge);
    const bool eight = rng() % 4 != 0;

    BruteForceHseg oracle(img, eight);
    const auto expected = oracle.run(params.spectral_weight, params.target_regions);
    merges += expected.size();
    for (const SearchStrategy& s : strategies) {
      for (std::size_t workers : {1, 2, 4}) {
        RegionGraph g = init_region_graph(img, eight ? Connectivity::Eight : Connectivity::Four);
        const HsegRun run = hseg_run(g, params, s, workers);
        ++runs;
        bool same = run.hierarchy.records.size() == expected.size();
        for (std::size_t k = 0; same && k < expected.size(); ++k) {
          const MergeRecord& m = run.hierarchy.records[k];
          same = m.survivor == expected[k].survivor && m.absorbed == expected[k].absorbed &&
                 m.dissimilarity == expected[k].dissim &&
                 (m.kind == MergeKind::NonAdjacent) == expected[k].nonadjacent;
        }
        if (!same) {
          return fail("case " + std::to_string(c) + " diverges under " + std::string(to_string(s.kind)) +
                      " tile " + std::to_string(s.tile_k) + " workers " + std::to_string(workers));
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return judge(elapsed < kOracleBudgetS, std::to_string(kOracleCases) + " images, " + std::to_string(runs) +
                                             " runs, " + std::to_string(merges) + " oracle merges, " +
                                             fmt(elapsed, 1) + " s (budget " + fmt(kOracleBudgetS, 0) + " s)");
}

// 2. Byte-identical outputs across every execution configuration.
struct Digest {
  std::string labels;
  std::string merge_log;
  std::string combined;
};

Digest digest_run(const HyperImage& image, const RhsegParams& params, SectionExecutor& executor) {
  const RhsegOutput out = rhseg_run(image, params, executor);
  RunManifest m;
  seal_manifest(m, encode_pgm(out.labels), encode_merge_log(out.logs));
  return {m.labels_sha256, m.merge_log_sha256, m.combined_sha256};
}

Outcome identical_results() {
  const auto t0 = Clock::now();
  LoopbackWorkers loopback(8);
  const auto endpoints = loopback.endpoints();

  std::vector<ExecutionConfig> configs;
  auto add = [&](ExecutionConfig c) { configs.push_back(std::move(c)); };
  add({});
  ExecutionConfig c;
  c.threads = 2;
  c.strategy = SearchStrategy::per_region();
  add(c);
  for (std::size_t k : {2, 4, 16}) {
    c.strategy = SearchStrategy::per_pair(k);
    add(c);
  }
  for (std::size_t scalar : {1, 3, 7}) {
    for (bool migration : {true, false}) {
      ExecutionConfig h;
      h.executor = ExecutorKind::Hybrid;
      h.scalar_workers = scalar;
      h.migration = migration;
      h.threads = 2;
      add(h);
    }
  }
  for (std::size_t n : {0, 4, 8}) {
    ExecutionConfig cl;
    cl.executor = ExecutorKind::Cluster;
    cl.endpoints.assign(endpoints.begin(), endpoints.begin() + static_cast<std::ptrdiff_t>(n));
    add(cl);
  }

  struct Scene {
    std::size_t edge, bands, levels;
  };
  std::size_t compared = 0;
  for (const Scene s : {Scene{64, 16, 3}, Scene{128, 8, 4}}) {
    SyntheticSpec spec;
    spec.edge = s.edge;
    spec.bands = s.bands;
    spec.classes = 4;
    spec.regions = 9;
    spec.noise_sigma = 4.0;
    spec.seed = s.edge;
    const HyperImage image = gen_synthetic(spec).image;
    RhsegParams params;
    params.levels = s.levels;

    std::optional<Digest> base;
    for (const ExecutionConfig& cfg : configs) {
      auto executor = make_executor(cfg);
      const Digest d = digest_run(image, params, *executor);
      if (!base) {
        base = d;
        continue;
      }
      ++compared;
      if (d.labels != base->labels || d.merge_log != base->merge_log || d.combined != base->combined) {
        return fail(std::to_string(s.edge) + "x" + std::to_string(s.edge) + "x" + std::to_string(s.bands) +
                    ": '" + cfg.label() + "' differs from sequential");
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return judge(elapsed < kReproBudgetS, std::to_string(configs.size()) + " configurations x 2 scenes, " +
                                            std::to_string(compared) + " manifests equal to sequential, " +
                                            fmt(elapsed, 1) + " s (budget " + fmt(kReproBudgetS, 0) + " s)");
}

// 3. Hand-derivable dissimilarity values.
Outcome hand_values() {
  const double root2 = sqrt_bsmse(1, std::vector<double>{0.0}, 1, std::vector<double>{2.0});
  const double five = sqrt_bsmse(2, std::vector<double>{6.0, 8.0}, 2, std::vector<double>{0.0, 0.0});
  const double zero =
      sqrt_bsmse(5, std::vector<double>{7.5, -10.0, 36.25}, 3, std::vector<double>{4.5, -6.0, 21.75});
  const double e1 = std::abs(root2 - std::sqrt(2.0)) / std::sqrt(2.0);
  const double e2 = std::abs(five - 5.0) / 5.0;
  return judge(e1 <= kHandValueRelTol && e2 <= kHandValueRelTol && zero == 0.0,
               "sqrt(2) rel err " + sci(e1) + ", 5.0 rel err " + sci(e2) + ", equal means give " + sci(zero) +
                   " (tolerance " + sci(kHandValueRelTol) + ")");
}

// 4. Quadtree shape, L=1 equivalence, conservation at every stitch.
std::vector<double> image_totals(const HyperImage& img) {
  std::vector<double> t(img.bands(), 0.0);
  const std::size_t pixels = img.pixel_count();
  for (std::size_t b = 0; b < img.bands(); ++b) {
    for (std::size_t p = 0; p < pixels; ++p) t[b] += img.samples()[b * pixels + p];
  }
  return t;
}

bool conserved(const RegionGraph& g, const HyperImage& section, std::string& why) {
  std::size_t pixels = 0;
  std::vector<double> totals(g.bands(), 0.0);
  for (RegionId id : g.live_ids()) {
    pixels += g.pixel_count(id);
    for (std::size_t b = 0; b < g.bands(); ++b) totals[b] += g.band_sums(id)[b];
  }
  if (pixels != section.pixel_count()) {
    why = "pixel count " + std::to_string(pixels);
    return false;
  }
  for (RegionId a : g.assignment()) {
    if (!g.is_live(a)) {
      why = "pixel assigned to a dead region";
      return false;
    }
  }
  const auto expected = image_totals(section);
  for (std::size_t b = 0; b < totals.size(); ++b) {
    if (std::abs(totals[b] - expected[b]) > kConservationRelTol * std::max(1.0, std::abs(expected[b]))) {
      why = "band " + std::to_string(b) + " total drifted";
      return false;
    }
  }
  return true;
}

Outcome rhseg_structure() {
  {
    const HyperImage img(128, 1, std::vector<float>(128 * 128, 0.0f));
    const Quadtree tree = partition(img, 3);
    const auto leaves = tree.leaves();
    if (leaves.size() != 16) return fail("128x128 at L=3 gave " + std::to_string(leaves.size()) + " sections");
    for (const SectionTask& t : leaves) {
      if (t.edge != 32) return fail("leaf edge " + std::to_string(t.edge));
    }
  }

  std::mt19937_64 rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t edge = 3 + rng() % 8;
    const HyperImage img = random_image(rng, edge, 1 + rng() % 4, trial % 2 == 0);
    RhsegParams params;
    params.hseg.target_regions = 1 + rng() % 6;
    params.hseg.spectral_weight = trial % 3 == 0 ? 0.0 : kDefaultSpectralWeight;
    RegionGraph g = init_region_graph(img);
    const HsegRun direct = hseg_run(g, params.hseg);
    const RhsegOutput out = rhseg_run(img, params);
    if (out.logs.size() != 1 || !(out.logs[0].merges == direct.hierarchy) || !(out.final_graph == g) ||
        out.labels != current_labels(g)) {
      return fail("L=1 differs from HSEG on trial " + std::to_string(trial));
    }
  }

  std::size_t stitches = 0;
  for (int trial = 0; trial < 24; ++trial) {
    const std::size_t levels = 2 + trial % 3;
    const std::size_t edge = (std::size_t{1} << (levels - 1)) * (2 + rng() % 3);
    const HyperImage img = random_image(rng, edge, 1 + rng() % 5, false);
    RhsegParams params;
    params.levels = levels;
    params.hseg.target_regions = 1 + rng() % 4;
    params.section_target = 1 + rng() % 5;
    const Quadtree tree = partition(img, levels);
    std::vector<SectionResult> current;
    for (const SectionTask& leaf : tree.leaves()) {
      current.push_back(run_section(make_leaf_job(leaf, params), {}, std::make_shared<WorkerPool>(1)));
    }
    while (current.size() > 1) {
      std::map<SectionId, std::vector<SectionResult>> groups;
      for (SectionResult& s : current) groups[s.id.parent()].push_back(std::move(s));
      current.clear();
      for (auto& [parent, children] : groups) {
        std::size_t child_live = 0;
        for (const SectionResult& ch : children) child_live += ch.graph.live_count();
        SectionJob job = combine_group(children, params);
        const std::size_t e = edge >> (parent.level - 1);
        const HyperImage section = img.crop(parent.row * e, parent.col * e, e);
        std::string why;
        if (!conserved(job.graph, section, why)) return fail("stitch " + parent.to_string() + ": " + why);
        if (job.graph.live_count() != child_live) return fail("stitch " + parent.to_string() + " lost regions");
        ++stitches;
        SectionResult r = run_section(std::move(job), {}, std::make_shared<WorkerPool>(1));
        if (!conserved(r.graph, section, why)) return fail("after HSEG " + parent.to_string() + ": " + why);
        current.push_back(std::move(r));
      }
    }
  }
  return pass("16 sections at L=3, L=1 identical on 30 images, conservation held at " + std::to_string(stitches) +
              " stitches");
}

// 5. Plurality accuracy.
Outcome accuracy_pipeline() {
  SyntheticSpec spec;
  spec.edge = 64;
  spec.bands = 8;
  spec.classes = 4;
  spec.regions = 4;
  const SyntheticScene scene = gen_synthetic(spec);
  RhsegParams params;
  params.levels = 3;
  params.hseg.target_regions = spec.regions;
  const RhsegOutput out = rhseg_run(scene.image, params);
  const AccuracyReport full = assign_plurality_classes(out.labels, scene.truth);
  if (!full.overall || *full.overall != 100.0) {
    return fail("noiseless scene scored " + (full.overall ? fmt(*full.overall, 2) : std::string("undefined")) + "%");
  }

  const LabelMap truth{5, 1, {1, 2, 1, 2, 1}};
  const AccuracyReport r = assign_plurality_classes(LabelMap{5, 1, {0, 0, 0, 0, 0}}, truth);
  const bool hand = r.assignment.at(0) == 1 &&
                    r.confusion == std::vector<std::vector<std::size_t>>{{3, 0}, {2, 0}} &&
                    r.per_class == std::vector<double>{100.0, 0.0} && r.overall && *r.overall == 60.0;
  return judge(hand, "noiseless 64x64x8 with 4 classes: 100.00% overall; 5-pixel case " +
                         std::string(hand ? "matches" : "does not match") + " confusion {{3,0},{2,0}}");
}

// 6. Share of wall time spent evaluating dissimilarities.
HyperImage profile_scene() {
  SyntheticSpec spec;
  spec.edge = 64;
  spec.bands = 32;
  spec.classes = 4;
  spec.regions = 9;
  spec.noise_sigma = 4.0;
  spec.seed = 6;
  return gen_synthetic(spec).image;
}

RhsegParams profile_params() {
  RhsegParams p;
  p.levels = 3;
  return p;
}

Outcome hot_loop() {
  const HyperImage image = profile_scene();
  const auto t0 = Clock::now();
  const RhsegOutput out = rhseg_run(image, profile_params(), SearchStrategy::sequential(), 1);
  const auto wall = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
  const double fraction = static_cast<double>(out.profile.search_ns) / static_cast<double>(wall);
  return judge(fraction >= kDissimFractionMin, "64x64x32 sequential, " + std::to_string(out.profile.steps) +
                                                   " steps: pair search " + fmt(100.0 * fraction, 1) +
                                                   "% of " + fmt(static_cast<double>(wall) / 1e6, 1) +
                                                   " ms (threshold " + fmt(100.0 * kDissimFractionMin, 0) + "%)");
}

// 7. Parallel speedup of the tiled search.
double median_wall_ms(const HyperImage& image, std::size_t workers) {
  std::vector<double> runs;
  for (int i = 0; i < 3; ++i) {
    const auto t0 = Clock::now();
    rhseg_run(image, profile_params(), SearchStrategy::per_pair(), workers);
    runs.push_back(seconds_since(t0) * 1e3);
  }
  std::sort(runs.begin(), runs.end());
  return runs[1];
}

Outcome parallel_speedup() {
  const unsigned hw = std::thread::hardware_concurrency();
  const HyperImage image = profile_scene();
  const double one = median_wall_ms(image, 1);
  const double four = median_wall_ms(image, 4);
  const double speedup = one / four;
  const std::string detail = "per-pair workers=4 vs 1 on 64x64x32, median of 3: " + fmt(one, 1) + " ms / " +
                             fmt(four, 1) + " ms = " + fmt(speedup, 2) + "x (threshold " + fmt(kSpeedupMin, 1) +
                             "x); host has " + std::to_string(hw) + " hardware threads";
  if (hw < kSpeedupMinThreads) {
    return {Verdict::NotApplicable, detail + ", needs >= " + std::to_string(kSpeedupMinThreads)};
  }
  return judge(speedup >= kSpeedupMin, detail);
}

// 8. Codec round trips, fuzzing, and a worker dying mid-run.
Outcome protocol_robustness() {
  using namespace wire;
  wire::AssignPayload assign;
  assign.section = SectionId{3, 2, 1};
  assign.edge = 2;
  assign.bands = 2;
  assign.spectral_weight = 0.21;
  assign.section_target = 2;
  assign.strategy = StrategyKind::PerPair;
  assign.tile_k = 4;
  assign.samples = {0, 1, 5, 6, 2, 2, 8, 9};
  const HyperImage small(2, 2, assign.samples);
  RegionGraph g = init_region_graph(small);
  HsegParams p;
  const HsegRun run = hseg_run(g, p);
  const ResultPayload result = make_result(assign.section, run.hierarchy, g);

  const std::vector<Message> messages{
      {MessageType::Hello, {}},
      {MessageType::Assign, encode_assign(assign)},
      {MessageType::Result, encode_result(result)},
      {MessageType::Error, {'b', 'a', 'd'}},
      {MessageType::Shutdown, {}},
  };
  for (const Message& m : messages) {
    if (!(decode_message(encode_message(m)) == m)) return fail("frame round trip failed");
  }
  if (!(decode_assign(encode_assign(assign)) == assign)) return fail("ASSIGN payload round trip failed");
  if (!(decode_result(encode_result(result), 2, 2) == result)) return fail("RESULT payload round trip failed");
  if (!(result_graph(result, 2, 2) == g)) return fail("RESULT graph rebuild differs");

  std::mt19937_64 rng(8);
  const auto frame_assign = encode_message(messages[1]);
  const auto payload_result = messages[2].payload;
  std::size_t rejected = 0;
  for (int i = 0; i < kFuzzFrames; ++i) {
    std::vector<std::uint8_t> bytes;
    if (i % 3 == 0) {
      bytes.resize(rng() % 80);
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
      if (bytes.size() >= 10 && i % 2) {
        const std::uint8_t magic[] = {'R', 'H', 'S', 'G', 1};
        std::copy(std::begin(magic), std::end(magic), bytes.begin());
      }
    } else {
      bytes = i % 3 == 1 ? frame_assign : payload_result;
      const int flips = 1 + static_cast<int>(rng() % 4);
      for (int k = 0; k < flips; ++k) bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
      if (rng() % 2) bytes.resize(rng() % bytes.size());
    }
    try {
      if (i % 3 == 2) {
        (void)result_graph(decode_result(bytes, 2, 2), 2, 2);
      } else {
        const Message m = decode_message(bytes);
        if (m.type == MessageType::Assign) (void)decode_assign(m.payload);
      }
    } catch (const Error&) {
      ++rejected;
    } catch (const std::exception& e) {
      return fail(std::string("fuzz frame raised a non-protocol exception: ") + e.what());
    }
  }

  SyntheticSpec spec;
  spec.edge = 32;
  spec.bands = 4;
  spec.regions = 6;
  spec.noise_sigma = 3.0;
  const HyperImage image = gen_synthetic(spec).image;
  RhsegParams params;
  params.levels = 3;
  SequentialExecutor reference_exec;
  const Digest reference = digest_run(image, params, reference_exec);
  WorkerServerConfig dying;
  dying.die_after_assignments = 1;
  LoopbackWorkers workers(2, dying);
  ClusterConfig cfg;
  cfg.workers = workers.endpoints();
  ClusterExecutor cluster(cfg);
  const Digest got = digest_run(image, params, cluster);
  const ClusterStats s = cluster.stats();
  if (got.combined != reference.combined) return fail("output changed after a worker died");
  if (s.redispatched == 0) return fail("no section was re-dispatched; the kill did not land mid-run");
  return pass("5 message types round-trip; " + std::to_string(kFuzzFrames) + " fuzzed frames, " +
              std::to_string(rejected) + " rejected with protocol errors, none crashed; workers died after " +
              std::to_string(s.results) + " results, " + std::to_string(s.redispatched) +
              " sections re-dispatched, output unchanged");
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "oracle equivalence", oracle_equivalence},
      {2, "identical results across executors", identical_results},
      {3, "dissimilarity hand values", hand_values},
      {4, "RHSEG structure", rhseg_structure},
      {5, "accuracy pipeline", accuracy_pipeline},
      {6, "hot-loop profile", hot_loop},
      {7, "parallel speedup", parallel_speedup},
      {8, "protocol robustness", protocol_robustness},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "N/A ";
    if (o.verdict == Verdict::Fail) ++failures;
    std::cout << tag << "  " << c.number << " " << c.name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
