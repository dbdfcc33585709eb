#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace fpc {

struct ReportRow {
  std::string pair;
  std::string split = "all";
  std::string metric;
  double eps = 0.0;
  double value = 0.0;
  bool defined = true;
};

struct AggregateRow {
  std::string split;
  std::string metric;
  double eps = 0.0;
  double value = 0.0;  // mean over defined rows
  std::size_t count = 0;
};

/// Per-pair rows plus means keyed by (split, metric, eps). Every row also
/// feeds the "all" split. Undefined rows are written but never averaged.
struct EvalReport {
  std::vector<std::pair<std::string, std::string>> notes;  // "# key: value" header lines
  std::vector<ReportRow> rows;
  std::vector<AggregateRow> aggregates;

  void add(ReportRow row) { rows.push_back(std::move(row)); }
  std::size_t undefined_count() const;
  void finalize();
  std::string csv() const;
  // Aggregate value for (metric, eps) over the "all" split; throws if absent.
  double aggregate(const std::string& metric, double eps) const;
};

struct PoseRow {
  std::string scene;
  std::size_t k = 0;
  double rot_err = 0.0;    // radians
  double trans_err = 0.0;  // meters
  std::size_t inliers = 0;
  bool ok = true;          // false when RANSAC produced no model
};

struct PoseAggregate {
  std::size_t k = 0;
  double mean_rot = 0.0, mean_trans = 0.0;
  double median_rot = 0.0, median_trans = 0.0;
  std::size_t count = 0;
};

struct PoseReport {
  std::vector<std::pair<std::string, std::string>> notes;
  std::vector<PoseRow> rows;
  std::vector<PoseAggregate> aggregates;

  void finalize();
  std::string csv() const;
  const PoseAggregate& at_k(std::size_t k) const;
};

double median(std::vector<double> v);

}  // namespace fpc
