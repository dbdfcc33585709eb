#include "fpc/evalharness/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"

namespace fpc {
namespace {

void write_notes(std::ostringstream& out,
                 const std::vector<std::pair<std::string, std::string>>& notes) {
  for (const auto& [k, v] : notes) out << "# " << k << ": " << v << "\n";
}

std::string number(double v) { return std::isfinite(v) ? format_double(v) : "undefined"; }

}  // namespace

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::size_t EvalReport::undefined_count() const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return !r.defined; }));
}

void EvalReport::finalize() {
  aggregates.clear();
  using Key = std::tuple<std::string, std::string, double>;
  std::vector<Key> order;
  std::vector<std::pair<double, std::size_t>> acc;
  auto feed = [&](const std::string& split, const ReportRow& r) {
    const Key key{split, r.metric, r.eps};
    auto it = std::find(order.begin(), order.end(), key);
    std::size_t idx;
    if (it == order.end()) {
      order.push_back(key);
      acc.emplace_back(0.0, 0);
      idx = order.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - order.begin());
    }
    if (r.defined) {
      acc[idx].first += r.value;
      ++acc[idx].second;
    }
  };
  for (const ReportRow& r : rows) {
    feed("all", r);
    if (r.split != "all") feed(r.split, r);
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& [split, metric, eps] = order[i];
    const double mean = acc[i].second ? acc[i].first / static_cast<double>(acc[i].second)
                                      : std::nan("");
    aggregates.push_back({split, metric, eps, mean, acc[i].second});
  }
}

std::string EvalReport::csv() const {
  std::ostringstream out;
  write_notes(out, notes);
  out << "# undefined_rows: " << undefined_count() << "\n";
  out << "pair,split,metric,eps,value\n";
  for (const ReportRow& r : rows) {
    out << r.pair << ',' << r.split << ',' << r.metric << ',' << format_double(r.eps) << ','
        << (r.defined ? number(r.value) : "undefined") << "\n";
  }
  for (const AggregateRow& a : aggregates) {
    out << "aggregate," << a.split << ',' << a.metric << ',' << format_double(a.eps) << ','
        << number(a.value) << "\n";
  }
  return out.str();
}

double EvalReport::aggregate(const std::string& metric, double eps) const {
  for (const AggregateRow& a : aggregates) {
    if (a.split == "all" && a.metric == metric && a.eps == eps) return a.value;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "no aggregate for " + metric + " at eps " + format_double(eps));
}

void PoseReport::finalize() {
  aggregates.clear();
  std::vector<std::size_t> ks;
  for (const PoseRow& r : rows) {
    if (std::find(ks.begin(), ks.end(), r.k) == ks.end()) ks.push_back(r.k);
  }
  for (std::size_t k : ks) {
    std::vector<double> rot, trans;
    for (const PoseRow& r : rows) {
      if (r.k == k && r.ok) {
        rot.push_back(r.rot_err);
        trans.push_back(r.trans_err);
      }
    }
    PoseAggregate a;
    a.k = k;
    a.count = rot.size();
    double sr = 0.0, st = 0.0;
    for (std::size_t i = 0; i < rot.size(); ++i) {
      sr += rot[i];
      st += trans[i];
    }
    a.mean_rot = rot.empty() ? std::nan("") : sr / static_cast<double>(rot.size());
    a.mean_trans = rot.empty() ? std::nan("") : st / static_cast<double>(rot.size());
    a.median_rot = median(rot);
    a.median_trans = median(trans);
    aggregates.push_back(a);
  }
}

std::string PoseReport::csv() const {
  std::ostringstream out;
  write_notes(out, notes);
  const auto failed =
      std::count_if(rows.begin(), rows.end(), [](const PoseRow& r) { return !r.ok; });
  out << "# failed_rows: " << failed << "\n";
  out << "scene,k,rot_err,trans_err,inliers\n";
  for (const PoseRow& r : rows) {
    out << r.scene << ',' << r.k << ',' << (r.ok ? number(r.rot_err) : "undefined") << ','
        << (r.ok ? number(r.trans_err) : "undefined") << ',' << r.inliers << "\n";
  }
  for (const PoseAggregate& a : aggregates) {
    out << "mean," << a.k << ',' << number(a.mean_rot) << ',' << number(a.mean_trans) << ','
        << a.count << "\n";
    out << "median," << a.k << ',' << number(a.median_rot) << ',' << number(a.median_trans)
        << ',' << a.count << "\n";
  }
  return out.str();
}

const PoseAggregate& PoseReport::at_k(std::size_t k) const {
  for (const PoseAggregate& a : aggregates) {
    if (a.k == k) return a;
  }
  throw Error(ErrorCode::kInvalidArgument, "no pose aggregate for k = " + std::to_string(k));
}

}  // namespace fpc
