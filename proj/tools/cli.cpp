#include "cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "rhseg/accuracy.hpp"
#include "rhseg/bench.hpp"
#include "rhseg/cluster.hpp"
#include "rhseg/error.hpp"
#include "rhseg/execution.hpp"
#include "rhseg/hybrid.hpp"
#include "rhseg/image_io.hpp"
#include "rhseg/labels_io.hpp"
#include "rhseg/merge_log.hpp"
#include "rhseg/rhseg.hpp"
#include "rhseg/synthetic.hpp"

namespace rhseg::cli {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_size(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw UsageError(what + ": '" + text + "' is not a non-negative integer");
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// --workers is either a thread count or a list of host:port endpoints.
struct WorkersFlag {
  std::optional<std::size_t> count;
  std::vector<net::Endpoint> endpoints;
};

WorkersFlag parse_workers(const std::string& text) {
  WorkersFlag w;
  if (text.empty()) return w;
  if (text.find_first_not_of("0123456789") == std::string::npos) {
    w.count = parse_size(text, "--workers");
    if (*w.count == 0) throw UsageError("--workers must be >= 1");
    return w;
  }
  for (const std::string& item : split(text, ',')) {
    try {
      w.endpoints.push_back(net::Endpoint::parse(item));
    } catch (const Error& e) {
      throw UsageError(std::string("--workers: ") + e.what());
    }
  }
  return w;
}

struct ImageOptions {
  std::string header;
  std::string raw;
  std::string crop;
  std::string drop_bands;

  void add(CLI::App* app, bool required) {
    auto* o = app->add_option("--image", header, "Image header file (key = value text)");
    if (required) o->required();
    app->add_option("--raw", raw, "Raw band-sequential f32 samples (default: header path with .raw)");
    app->add_option("--crop", crop, "Crop window x,y,w,h applied after reading (w must equal h)");
    app->add_option("--drop-bands", drop_bands, "Comma-separated 0-based band indices to remove");
  }

  HyperImage load(std::map<std::string, std::string>& params) const {
    const fs::path raw_path = raw.empty() ? fs::path(header).replace_extension(".raw") : fs::path(raw);
    Raster r = read_raster(header, raw_path);
    if (!crop.empty()) {
      const auto parts = split(crop, ',');
      if (parts.size() != 4) throw UsageError("--crop expects x,y,w,h");
      r = r.crop(parse_size(parts[0], "--crop"), parse_size(parts[1], "--crop"), parse_size(parts[2], "--crop"),
                 parse_size(parts[3], "--crop"));
    }
    if (!drop_bands.empty()) {
      std::vector<std::size_t> drop;
      for (const auto& s : split(drop_bands, ',')) drop.push_back(parse_size(s, "--drop-bands"));
      r = r.drop_bands(drop);
    }
    params["input"] = header;
    params["crop"] = crop;
    params["drop_bands"] = drop_bands;
    const HyperImage image = r.to_image();
    params["input_sha256"] = sha256_hex(
        std::span(reinterpret_cast<const std::uint8_t*>(image.samples().data()), image.samples().size() * 4));
    return image;
  }
};

struct AlgorithmOptions {
  double weight = kDefaultSpectralWeight;
  std::size_t target = 2;
  std::size_t levels = 1;
  std::size_t section_target = 0;
  int connectivity = 8;
  std::string measure{SqrtBsmse::kName};

  void add(CLI::App* app) {
    app->add_option("--weight", weight, "Spectral clustering weight in [0, 1]")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--target-regions", target, "Region count at which the root stops")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--levels", levels, "Recursion levels; 1 runs plain HSEG")
        ->check(CLI::Range(1, 15))
        ->capture_default_str();
    app->add_option("--section-target", section_target,
                    "Region count at which non-root sections stop (default: --target-regions)")
        ->check(CLI::PositiveNumber);
    app->add_option("--connectivity", connectivity, "Pixel neighborhood, 4 or 8")
        ->check(CLI::IsMember({4, 8}))
        ->capture_default_str();
    app->add_option("--measure", measure, "Dissimilarity measure")
        ->check(CLI::IsMember({std::string(SqrtBsmse::kName)}))
        ->capture_default_str();
  }

  RhsegParams params() const {
    RhsegParams p;
    p.levels = levels;
    p.hseg.spectral_weight = weight;
    p.hseg.target_regions = target;
    p.hseg.measure = measure;
    if (section_target > 0) p.section_target = section_target;
    p.connectivity = connectivity == 4 ? Connectivity::Four : Connectivity::Eight;
    return p;
  }

  void describe(std::map<std::string, std::string>& out) const {
    out["weight"] = format_double(weight);
    out["target_regions"] = std::to_string(target);
    out["levels"] = std::to_string(levels);
    out["section_target"] = std::to_string(section_target > 0 ? section_target : target);
    out["connectivity"] = std::to_string(connectivity);
    out["measure"] = measure;
  }
};

struct ExecutionOptions {
  std::string executor = "seq";
  std::string strategy = "seq";
  std::size_t tile_k = kDefaultTileK;
  std::string workers;
  std::size_t threads = 0;
  std::size_t scalar_workers = 3;
  bool no_migration = false;
  bool shutdown_workers = false;

  void add(CLI::App* app) {
    app->add_option("--executor", executor, "Section executor: seq, hybrid, cluster")
        ->check(CLI::IsMember({"seq", "hybrid", "cluster"}))
        ->capture_default_str();
    app->add_option("--strategy", strategy, "Best-pair search: seq, per-region, per-pair")
        ->check(CLI::IsMember({"seq", "per-region", "per-pair"}))
        ->capture_default_str();
    app->add_option("--tile-k", tile_k, "Tile edge for the per-pair search")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--workers", workers,
                    "Search thread count, or host:port,... worker endpoints for --executor cluster")
        ->envname("RHSEG_WORKERS");
    app->add_option("--threads", threads, "Search thread count (overrides a numeric --workers)")
        ->check(CLI::PositiveNumber);
    app->add_option("--scalar-workers", scalar_workers, "Sequential workers beside the fast worker (hybrid)")
        ->capture_default_str();
    app->add_flag("--no-migration", no_migration, "Never move running sections to the fast worker (hybrid)");
    app->add_flag("--shutdown-workers", shutdown_workers, "Send SHUTDOWN to every worker after the run (cluster)");
  }

  ExecutionConfig config() const {
    ExecutionConfig c;
    c.executor = parse_executor_kind(executor);
    c.strategy = SearchStrategy{parse_strategy_kind(strategy), tile_k};
    const WorkersFlag w = parse_workers(workers);
    c.threads = threads > 0 ? threads : w.count.value_or(1);
    c.endpoints = w.endpoints;
    c.scalar_workers = scalar_workers;
    c.migration = !no_migration;
    c.shutdown_workers = shutdown_workers;
    if (c.executor == ExecutorKind::Cluster && c.endpoints.empty()) {
      throw UsageError("--executor cluster requires --workers host:port[,host:port...]");
    }
    if (c.executor != ExecutorKind::Cluster && !c.endpoints.empty()) {
      throw UsageError("worker endpoints are only used with --executor cluster");
    }
    return c;
  }

  static void describe(const ExecutionConfig& c, std::map<std::string, std::string>& out) {
    out["executor"] = std::string(to_string(c.executor));
    out["strategy"] = std::string(to_string(c.strategy.kind));
    out["tile_k"] = std::to_string(c.strategy.tile_k);
    out["threads"] = std::to_string(c.threads);
    if (c.executor == ExecutorKind::Hybrid) {
      out["scalar_workers"] = std::to_string(c.scalar_workers);
      out["migration"] = c.migration ? "on" : "off";
    }
    if (c.executor == ExecutorKind::Cluster) {
      std::string list;
      for (const auto& e : c.endpoints) list += (list.empty() ? "" : ",") + e.to_string();
      out["workers"] = list;
    }
  }
};

struct SegmentOptions {
  ImageOptions image;
  AlgorithmOptions algorithm;
  ExecutionOptions execution;
  std::size_t at_regions = 0;
  std::string ground_truth;
  bool sweep = false;
  std::string accuracy_json;
  std::string event_log;
  std::string out_dir = ".";
  std::string labels = "labels.pgm";
  std::string merge_log = "merges.jsonl";
  std::string manifest = "manifest.json";
  std::string csv;
};

struct SynthOptions {
  SyntheticSpec spec;
  std::string out_dir = ".";
  std::string name = "synthetic";

  void add(CLI::App* app, bool with_outputs) {
    app->add_option("--edge", spec.edge, "Image edge in pixels")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--bands", spec.bands, "Spectral bands")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--classes", spec.classes, "Ground-truth classes")->capture_default_str();
    app->add_option("--regions", spec.regions, "Rectangular patches")->capture_default_str();
    app->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma per sample")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app->add_option("--seed", spec.seed, "Noise generator seed")->capture_default_str();
    if (with_outputs) {
      app->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
      app->add_option("--name", name, "Output file stem")->capture_default_str();
    }
  }
};

struct AccuracyOptions {
  std::string labels;
  std::string ground_truth;
  std::string json;
};

struct BenchOptions {
  ImageOptions image;
  SynthOptions synth;
  AlgorithmOptions algorithm;
  std::vector<std::string> configs;
  std::size_t repeats = 3;
  std::size_t threads = 0;
  std::string json;
};

struct WorkerOptions {
  std::string listen;
  std::size_t threads = 1;
};

fs::path output_path(const std::string& dir, const std::string& name) { return fs::path(dir) / name; }

void print_accuracy(const AccuracyReport& r, std::ostream& out) { out << r.to_text(); }

int run_segment(const SegmentOptions& o, std::ostream& out) {
  RunManifest manifest;
  const ExecutionConfig exec = o.execution.config();
  const RhsegParams params = o.algorithm.params();
  if (o.sweep && o.ground_truth.empty()) throw UsageError("--sweep needs --ground-truth");
  if (!o.event_log.empty() && exec.executor != ExecutorKind::Hybrid) {
    throw UsageError("--event-log needs --executor hybrid");
  }

  const HyperImage image = o.image.load(manifest.parameters);
  manifest.parameters["edge"] = std::to_string(image.edge());
  manifest.parameters["bands"] = std::to_string(image.bands());
  o.algorithm.describe(manifest.parameters);
  manifest.parameters["at_regions"] = o.at_regions ? std::to_string(o.at_regions) : "";
  ExecutionOptions::describe(exec, manifest.execution);

  auto executor = make_executor(exec);
  const auto t0 = std::chrono::steady_clock::now();
  const RhsegOutput result = rhseg_run(image, params, *executor);
  const auto wall = std::chrono::steady_clock::now() - t0;

  LabelMap labels = result.labels;
  if (o.at_regions) labels = extract_labels(result.root_hierarchy, result.root_initial, o.at_regions);

  fs::create_directories(o.out_dir);
  const fs::path labels_path = output_path(o.out_dir, o.labels);
  const fs::path log_path = output_path(o.out_dir, o.merge_log);
  const fs::path manifest_path = output_path(o.out_dir, o.manifest);
  const auto label_bytes = encode_pgm(labels);
  const std::string log_text = encode_merge_log(result.logs);
  write_file(labels_path, label_bytes);
  write_file(log_path, std::span(reinterpret_cast<const std::uint8_t*>(log_text.data()), log_text.size()));
  if (!o.csv.empty()) write_labels_csv(labels, output_path(o.out_dir, o.csv));

  manifest.labels_path = labels_path.string();
  manifest.merge_log_path = log_path.string();
  manifest.region_count = o.at_regions ? o.at_regions : result.final_graph.live_count();
  manifest.converged_early = result.converged_early;
  seal_manifest(manifest, label_bytes, log_text);
  std::ofstream(manifest_path) << manifest.to_json();

  if (!o.event_log.empty()) {
    std::ofstream log(o.event_log);
    write_event_log(log, dynamic_cast<const HybridExecutor&>(*executor).events());
  }

  std::size_t merges = 0;
  for (const auto& l : result.logs) merges += l.merges.records.size();
  out << "sections " << result.section_count << ", merges " << merges << ", regions " << manifest.region_count
      << (result.converged_early ? " (converged above target)" : "") << "\n";
  out << "wall " << format_double(std::chrono::duration<double, std::milli>(wall).count()) << " ms, pair search "
      << format_double(100.0 * static_cast<double>(result.profile.search_ns) /
                       static_cast<double>(std::max<std::int64_t>(1, std::chrono::nanoseconds(wall).count())))
      << "% of it\n";
  out << "labels " << labels_path.string() << "\nmerge log " << log_path.string() << "\nmanifest "
      << manifest_path.string() << "\ncombined sha256 " << manifest.combined_sha256 << "\n";
  if (const auto* cluster = dynamic_cast<const ClusterExecutor*>(executor.get())) {
    const ClusterStats s = cluster->stats();
    out << "cluster: " << s.assignments << " assignments, " << s.results << " results, " << s.local_sections
        << " local sections, " << s.redispatched << " re-dispatched, " << s.quarantined << " quarantined, "
        << s.combine_events << " combines\n";
  }
  if (const auto* hybrid = dynamic_cast<const HybridExecutor*>(executor.get())) {
    const HybridStats s = hybrid->stats();
    out << "hybrid: fast worker finished " << s.fast_sections << " sections, " << s.migrations << " migrations, "
        << s.requeued << " re-queued\n";
  }

  if (!o.ground_truth.empty()) {
    const LabelMap truth = read_labels(o.ground_truth);
    const AccuracyReport report = assign_plurality_classes(labels, truth);
    print_accuracy(report, out);
    if (!o.accuracy_json.empty()) std::ofstream(o.accuracy_json) << report.to_json();
    if (o.sweep) {
      out << "regions  overall%\n";
      const std::size_t lo = result.root_hierarchy.final_region_count();
      const std::size_t hi = result.root_hierarchy.initial_region_count;
      for (std::size_t n = lo; n <= hi; ++n) {
        const AccuracyReport r =
            assign_plurality_classes(extract_labels(result.root_hierarchy, result.root_initial, n), truth);
        out << n << "  " << (r.overall ? format_double(*r.overall) : std::string("undefined")) << "\n";
      }
    }
  }
  return 0;
}

int run_synth(const SynthOptions& o, std::ostream& out) {
  const SyntheticScene scene = gen_synthetic(o.spec);
  fs::create_directories(o.out_dir);
  const fs::path hdr = output_path(o.out_dir, o.name + ".hdr");
  const fs::path raw = output_path(o.out_dir, o.name + ".raw");
  const fs::path truth = output_path(o.out_dir, o.name + "_truth.pgm");
  write_image(scene.image, hdr, raw);
  write_labels(scene.truth, truth);
  out << "image " << hdr.string() << " + " << raw.string() << "\nground truth " << truth.string() << "\n";
  return 0;
}

int run_accuracy(const AccuracyOptions& o, std::ostream& out) {
  const AccuracyReport r = assign_plurality_classes(read_labels(o.labels), read_labels(o.ground_truth));
  print_accuracy(r, out);
  if (!o.json.empty()) std::ofstream(o.json) << r.to_json();
  return 0;
}

// key=value pairs separated by commas, e.g.
// executor=hybrid,strategy=per-pair,tile-k=4,threads=2,scalar-workers=3,migration=off
ExecutionConfig parse_bench_config(const std::string& text, std::size_t default_threads) {
  ExecutionOptions o;
  o.threads = default_threads;
  for (const std::string& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--config item '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "executor") {
      o.executor = value;
    } else if (key == "strategy") {
      o.strategy = value;
    } else if (key == "tile-k") {
      o.tile_k = parse_size(value, key);
    } else if (key == "threads") {
      o.threads = parse_size(value, key);
    } else if (key == "scalar-workers") {
      o.scalar_workers = parse_size(value, key);
    } else if (key == "migration") {
      if (value != "on" && value != "off") throw UsageError("migration must be on or off");
      o.no_migration = value == "off";
    } else if (key == "workers") {
      std::string list = value;
      std::replace(list.begin(), list.end(), ';', ',');
      o.workers = list;
    } else {
      throw UsageError("unknown --config key '" + key + "'");
    }
  }
  try {
    return o.config();
  } catch (const Error& e) {
    throw UsageError(std::string("--config '") + text + "': " + e.what());
  }
}

int run_bench_command(const BenchOptions& o, std::ostream& out) {
  const std::size_t threads =
      o.threads > 0 ? o.threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  BenchSpec spec;
  spec.params = o.algorithm.params();
  spec.repeats = o.repeats;
  if (o.configs.empty()) {
    ExecutionConfig region;
    region.strategy = SearchStrategy::per_region();
    region.threads = threads;
    ExecutionConfig pair;
    pair.strategy = SearchStrategy::per_pair();
    pair.threads = threads;
    spec.configs = {region, pair};
  }
  for (const std::string& c : o.configs) spec.configs.push_back(parse_bench_config(c, threads));
  std::map<std::string, std::string> ignored;
  spec.image = o.image.header.empty() ? gen_synthetic(o.synth.spec).image : o.image.load(ignored);

  const BenchReport report = run_bench(spec);
  out << report.to_text();
  if (!o.json.empty()) std::ofstream(o.json) << report.to_json();
  if (!report.all_identical()) {
    throw Error(ErrorKind::InvariantViolation, "a configuration produced different output from the baseline");
  }
  return 0;
}

int run_worker(const WorkerOptions& o, std::ostream& out) {
  net::Endpoint listen;
  try {
    listen = net::Endpoint::parse(o.listen);
  } catch (const Error& e) {
    throw UsageError(std::string("--listen: ") + e.what());
  }
  WorkerServerConfig cfg;
  cfg.listen = listen;
  cfg.threads = o.threads;
  WorkerServer server(cfg);
  out << "listening on " << server.endpoint().to_string() << std::endl;
  if (!server.serve()) throw Error(ErrorKind::Io, "worker stopped without SHUTDOWN");
  out << "shutdown after " << server.assignments() << " assignments" << std::endl;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hierarchical segmentation of hyperspectral images (HSEG / RHSEG)", "rhseg"};
  app.require_subcommand(1);

  SegmentOptions seg;
  auto* segment = app.add_subcommand("segment", "Segment an image and write labels, merge log and manifest");
  seg.image.add(segment, true);
  seg.algorithm.add(segment);
  seg.execution.add(segment);
  segment->add_option("--at-regions", seg.at_regions, "Write labels at this region count of the root hierarchy")
      ->check(CLI::PositiveNumber);
  segment->add_option("--ground-truth", seg.ground_truth, "Ground-truth PGM (0 = unlabeled) for an accuracy report");
  segment->add_flag("--sweep", seg.sweep, "Report overall accuracy at every root hierarchy level");
  segment->add_option("--accuracy-json", seg.accuracy_json, "Write the accuracy report as JSON");
  segment->add_option("--event-log", seg.event_log, "Write hybrid scheduler events as JSON lines");
  segment->add_option("--out-dir", seg.out_dir, "Directory for outputs")->capture_default_str();
  segment->add_option("--labels", seg.labels, "Label map file name (PGM)")->capture_default_str();
  segment->add_option("--merge-log", seg.merge_log, "Merge log file name (JSON lines)")->capture_default_str();
  segment->add_option("--manifest", seg.manifest, "Run manifest file name")->capture_default_str();
  segment->add_option("--csv", seg.csv, "Also write the label map as CSV under this name");

  SynthOptions syn;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene and its ground truth");
  syn.add(synth, true);

  AccuracyOptions acc;
  auto* accuracy = app.add_subcommand("accuracy", "Score a label map against ground truth by plurality");
  accuracy->add_option("--labels", acc.labels, "Label map PGM")->required();
  accuracy->add_option("--ground-truth", acc.ground_truth, "Ground-truth PGM (0 = unlabeled)")->required();
  accuracy->add_option("--json", acc.json, "Write the report as JSON");

  BenchOptions ben;
  auto* bench = app.add_subcommand("bench", "Time executor configurations against the sequential baseline");
  ben.image.add(bench, false);
  ben.synth.add(bench, false);
  ben.algorithm.add(bench);
  bench->add_option("--config", ben.configs,
                    "Configuration as key=value,... (executor, strategy, tile-k, threads, scalar-workers, "
                    "migration, workers); repeatable");
  bench->add_option("--repeats", ben.repeats, "Timed runs per configuration; the median is reported")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--threads", ben.threads, "Default thread count for configurations (default: all cores)");
  bench->add_option("--json", ben.json, "Write the table as JSON");

  WorkerOptions wrk;
  auto* worker = app.add_subcommand("worker", "Serve section assignments until SHUTDOWN");
  worker->add_option("--listen", wrk.listen, "Address to listen on, host:port (port 0 picks one)")->required();
  worker->add_option("--threads", wrk.threads, "Search threads per section")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (segment->parsed()) return run_segment(seg, out);
    if (synth->parsed()) return run_synth(syn, out);
    if (accuracy->parsed()) return run_accuracy(acc, out);
    if (bench->parsed()) return run_bench_command(ben, out);
    if (worker->parsed()) return run_worker(wrk, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace rhseg::cli
