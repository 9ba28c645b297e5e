#include "rhseg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "rhseg/error.hpp"

namespace rhseg {
namespace {

bool is_baseline(const ExecutionConfig& c) {
  return c.executor == ExecutorKind::Sequential && c.strategy.kind == StrategyKind::Sequential && c.threads == 1;
}

}  // namespace

bool BenchReport::all_identical() const {
  return std::all_of(rows.begin(), rows.end(), [](const BenchRow& r) { return r.identical; });
}

BenchReport run_bench(const BenchSpec& spec) {
  if (spec.repeats == 0) throw Error(ErrorKind::InvalidArgument, "repeats must be >= 1");
  std::vector<ExecutionConfig> configs = spec.configs;
  if (configs.empty() || !is_baseline(configs.front())) configs.insert(configs.begin(), ExecutionConfig{});

  BenchReport report;
  report.edge = spec.image.edge();
  report.bands = spec.image.bands();
  report.levels = spec.params.levels;
  report.repeats = spec.repeats;

  std::optional<RhsegOutput> baseline;
  for (const ExecutionConfig& config : configs) {
    BenchRow row;
    row.label = config.label();
    row.config = config;
    std::vector<std::pair<std::uint64_t, double>> runs;
    for (std::size_t i = 0; i < spec.repeats; ++i) {
      auto executor = make_executor(config);
      const auto t0 = std::chrono::steady_clock::now();
      RhsegOutput out = rhseg_run(spec.image, spec.params, *executor);
      const auto ns = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count());
      const double fraction = ns == 0 ? 0.0 : static_cast<double>(out.profile.search_ns) / static_cast<double>(ns);
      runs.emplace_back(ns, fraction);
      row.wall_ns.push_back(ns);
      if (i == 0) {
        if (!baseline) {
          baseline = std::move(out);
        } else {
          row.identical = out.logs == baseline->logs && out.labels == baseline->labels;
        }
      }
    }
    std::sort(runs.begin(), runs.end());
    const auto& median = runs[runs.size() / 2];
    row.median_ns = median.first;
    row.dissim_fraction = median.second;
    row.speedup = report.rows.empty() || row.median_ns == 0
                      ? 1.0
                      : static_cast<double>(report.rows.front().median_ns) / static_cast<double>(row.median_ns);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string BenchReport::to_text() const {
  std::ostringstream out;
  out << "image " << edge << "x" << edge << "x" << bands << ", levels " << levels << ", median of " << repeats
      << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-40s %12s %9s %9s %10s\n", "configuration", "median ms", "speedup", "dissim%",
                "identical");
  out << buf;
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-40s %12.3f %8.2fx %8.1f%% %10s\n", r.label.c_str(),
                  static_cast<double>(r.median_ns) / 1e6, r.speedup, 100.0 * r.dissim_fraction,
                  r.identical ? "yes" : "NO");
    out << buf;
  }
  out << "dissim% is pair-search time summed over threads divided by wall time\n";
  return out.str();
}

std::string BenchReport::to_json() const {
  nlohmann::ordered_json j;
  j["edge"] = edge;
  j["bands"] = bands;
  j["levels"] = levels;
  j["repeats"] = repeats;
  j["rows"] = nlohmann::json::array();
  for (const BenchRow& r : rows) {
    nlohmann::ordered_json row;
    row["configuration"] = r.label;
    row["wall_ns"] = r.wall_ns;
    row["median_ns"] = r.median_ns;
    row["speedup"] = r.speedup;
    row["dissim_fraction"] = r.dissim_fraction;
    row["identical"] = r.identical;
    j["rows"].push_back(row);
  }
  return j.dump(2) + "\n";
}

}  // namespace rhseg
