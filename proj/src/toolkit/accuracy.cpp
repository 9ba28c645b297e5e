#include "rhseg/accuracy.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "rhseg/error.hpp"

namespace rhseg {

AccuracyReport assign_plurality_classes(const LabelMap& segments, const LabelMap& truth) {
  if (segments.width != truth.width || segments.height != truth.height ||
      segments.labels.size() != truth.labels.size()) {
    throw Error(ErrorKind::DimensionMismatch, "segmentation and ground truth differ in size");
  }
  AccuracyReport report;
  std::map<std::uint32_t, std::map<std::uint32_t, std::size_t>> overlap;
  for (std::size_t p = 0; p < truth.labels.size(); ++p) {
    const std::uint32_t t = truth.labels[p];
    report.assignment.try_emplace(segments.labels[p], 0);
    if (t == 0) continue;
    ++overlap[segments.labels[p]][t];
    report.classes.push_back(t);
  }
  std::sort(report.classes.begin(), report.classes.end());
  report.classes.erase(std::unique(report.classes.begin(), report.classes.end()), report.classes.end());

  for (const auto& [segment, counts] : overlap) {
    std::uint32_t best = 0;
    std::size_t best_count = 0;
    for (const auto& [cls, n] : counts) {  // ascending class, so strict > keeps the smaller on ties
      if (n > best_count) {
        best = cls;
        best_count = n;
      }
    }
    report.assignment[segment] = best;
  }

  const std::size_t k = report.classes.size();
  auto index_of = [&](std::uint32_t cls) {
    return static_cast<std::size_t>(std::lower_bound(report.classes.begin(), report.classes.end(), cls) -
                                    report.classes.begin());
  };
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t p = 0; p < truth.labels.size(); ++p) {
    const std::uint32_t t = truth.labels[p];
    if (t == 0) continue;
    const std::uint32_t assigned = report.assignment.at(segments.labels[p]);
    ++report.confusion[index_of(t)][index_of(assigned)];
    ++report.labeled_pixels;
    report.correct_pixels += assigned == t;
  }
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t row = 0;
    for (std::size_t n : report.confusion[i]) row += n;
    report.per_class.push_back(100.0 * static_cast<double>(report.confusion[i][i]) / static_cast<double>(row));
  }
  if (report.labeled_pixels > 0) {
    report.overall =
        100.0 * static_cast<double>(report.correct_pixels) / static_cast<double>(report.labeled_pixels);
  }
  return report;
}

std::string AccuracyReport::to_text() const {
  std::ostringstream out;
  char buf[64];
  out << "class  pixels  accuracy\n";
  for (std::size_t i = 0; i < classes.size(); ++i) {
    std::size_t row = 0;
    for (std::size_t n : confusion[i]) row += n;
    std::snprintf(buf, sizeof(buf), "%5u  %6zu  %7.2f%%\n", classes[i], row, per_class[i]);
    out << buf;
  }
  if (overall) {
    std::snprintf(buf, sizeof(buf), "overall %zu/%zu = %.2f%%\n", correct_pixels, labeled_pixels, *overall);
    out << buf;
  } else {
    out << "overall undefined: no labeled pixels\n";
  }
  return out.str();
}

std::string AccuracyReport::to_json() const {
  nlohmann::json j;
  j["classes"] = classes;
  j["per_class"] = per_class;
  j["confusion"] = confusion;
  j["labeled_pixels"] = labeled_pixels;
  j["correct_pixels"] = correct_pixels;
  j["overall"] = overall ? nlohmann::json(*overall) : nlohmann::json(nullptr);
  nlohmann::json assign = nlohmann::json::object();
  for (const auto& [segment, cls] : assignment) assign[std::to_string(segment)] = cls;
  j["assignment"] = assign;
  return j.dump(2);
}

}  // namespace rhseg
