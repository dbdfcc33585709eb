#include "fpc/matching/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"

namespace fpc {
namespace {

class NeighborGrid {
 public:
  NeighborGrid(const std::vector<Eigen::Vector2d>& pts, double cell)
      : pts_(pts), cell_(cell) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cells_[pack(key(pts[i].x()), key(pts[i].y()))].push_back(i);
    }
  }

  // Nearest point within max_dist (ties to lower index).
  std::optional<std::size_t> nearest(const Eigen::Vector2d& q, double max_dist) const {
    const long cx = key(q.x()), cy = key(q.y());
    double best = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> best_i;
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        auto it = cells_.find(pack(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (std::size_t i : it->second) {
          const double d = (pts_[i] - q).norm();
          if (d > max_dist) continue;
          if (d < best || (d == best && i < *best_i)) {
            best = d;
            best_i = i;
          }
        }
      }
    }
    return best_i;
  }

 private:
  long key(double v) const { return static_cast<long>(std::floor(v / cell_)); }
  static long long pack(long x, long y) {
    return (static_cast<long long>(x) << 32) ^ static_cast<long long>(y & 0xFFFFFFFF);
  }

  const std::vector<Eigen::Vector2d>& pts_;
  double cell_;
  std::unordered_map<long long, std::vector<std::size_t>> cells_;
};

}  // namespace

std::vector<Match> spatial_match(const std::vector<Keypoint>& kps_a,
                                 const std::vector<Keypoint>& kps_b, double max_dist,
                                 bool mutual, const std::optional<Homography>& prewarp) {
  if (!(max_dist > 0.0)) throw Error(ErrorCode::kInvalidArgument, "max_dist must be > 0");
  std::vector<Eigen::Vector2d> pa, pb;
  std::vector<std::size_t> a_index;  // pa[k] came from kps_a[a_index[k]]
  for (std::size_t i = 0; i < kps_a.size(); ++i) {
    Eigen::Vector2d p(kps_a[i].x, kps_a[i].y);
    if (prewarp) {
      try {
        p = hom_apply(*prewarp, p);
      } catch (const Error&) {
        continue;
      }
    }
    pa.push_back(p);
    a_index.push_back(i);
  }
  for (const Keypoint& kp : kps_b) pb.emplace_back(kp.x, kp.y);

  const NeighborGrid grid_b(pb, max_dist);
  const NeighborGrid grid_a(pa, max_dist);
  std::vector<Match> proposals;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    const auto j = grid_b.nearest(pa[k], max_dist);
    if (!j) continue;
    if (mutual) {
      const auto back = grid_a.nearest(pb[*j], max_dist);
      if (!back || *back != k) continue;
    }
    proposals.push_back({a_index[k], *j, (pa[k] - pb[*j]).norm()});
  }
  if (mutual) return proposals;

  std::vector<std::size_t> order(proposals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const Match& p = proposals[x];
    const Match& q = proposals[y];
    if (p.distance != q.distance) return p.distance < q.distance;
    return p.index_a < q.index_a;
  });
  std::vector<bool> used_b(kps_b.size(), false);
  std::vector<Match> kept;
  for (std::size_t i : order) {
    if (used_b[proposals[i].index_b]) continue;
    used_b[proposals[i].index_b] = true;
    kept.push_back(proposals[i]);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Match& p, const Match& q) { return p.index_a < q.index_a; });
  return kept;
}

std::string matches_csv(const std::vector<Match>& matches) {
  std::string out = "index_a,index_b,distance\n";
  for (const Match& m : matches) {
    out += std::to_string(m.index_a) + "," + std::to_string(m.index_b) + "," +
           format_double(m.distance) + "\n";
  }
  return out;
}

std::vector<PointPair> matched_points(const std::vector<Keypoint>& kps_a,
                                      const std::vector<Keypoint>& kps_b,
                                      const std::vector<Match>& matches) {
  std::vector<PointPair> pairs;
  pairs.reserve(matches.size());
  for (const Match& m : matches) {
    const Keypoint& a = kps_a.at(m.index_a);
    const Keypoint& b = kps_b.at(m.index_b);
    pairs.push_back({Eigen::Vector2d(a.x, a.y), Eigen::Vector2d(b.x, b.y)});
  }
  return pairs;
}

}  // namespace fpc
