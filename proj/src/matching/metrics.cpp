#include <cmath>
#include <limits>

#include "fpc/core/error.hpp"
#include "fpc/matching/matching.hpp"

namespace fpc {
namespace {

std::vector<Eigen::Vector2d> visible_mapped(const std::vector<Keypoint>& kps,
                                            const Homography& h, std::size_t width,
                                            std::size_t height,
                                            std::vector<Eigen::Vector2d>& originals) {
  const double xmax = static_cast<double>(width) - 1.0;
  const double ymax = static_cast<double>(height) - 1.0;
  std::vector<Eigen::Vector2d> mapped;
  for (const Keypoint& kp : kps) {
    const Eigen::Vector2d p(kp.x, kp.y);
    Eigen::Vector2d q;
    try {
      q = hom_apply(h, p);
    } catch (const Error&) {
      continue;
    }
    if (q.x() < 0.0 || q.y() < 0.0 || q.x() > xmax || q.y() > ymax) continue;
    mapped.push_back(q);
    originals.push_back(p);
  }
  return mapped;
}

std::size_t count_matched(const std::vector<Eigen::Vector2d>& mapped,
                          const std::vector<Eigen::Vector2d>& others, double eps) {
  std::size_t n = 0;
  for (const Eigen::Vector2d& p : mapped) {
    double best = std::numeric_limits<double>::infinity();
    for (const Eigen::Vector2d& q : others) best = std::min(best, (p - q).norm());
    if (best <= eps) ++n;
  }
  return n;
}

}  // namespace

double repeatability(const std::vector<Keypoint>& kps_a, const std::vector<Keypoint>& kps_b,
                     const Homography& h_gt, double eps, std::size_t width,
                     std::size_t height) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  const Homography h_inv = hom_invert(h_gt);
  std::vector<Eigen::Vector2d> a_orig, b_orig;
  const auto a_in_b = visible_mapped(kps_a, h_gt, width, height, a_orig);
  const auto b_in_a = visible_mapped(kps_b, h_inv, width, height, b_orig);
  const std::size_t total = a_in_b.size() + b_in_a.size();
  if (total == 0) {
    throw Error(ErrorCode::kUndefinedMetric, "repeatability undefined: no visible keypoints");
  }
  const std::size_t hits = count_matched(a_in_b, b_orig, eps) + count_matched(b_in_a, a_orig, eps);
  return static_cast<double>(hits) / static_cast<double>(total);
}

bool homography_correct(const Homography& h_gt, const Homography& h_est, double eps,
                        std::size_t width, std::size_t height) {
  if (!(eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "eps must be > 0");
  return corner_error(h_gt, h_est, width, height) <= eps;
}

double homography_accuracy(std::span<const HomographyTrial> trials, double eps,
                           std::size_t width, std::size_t height) {
  if (trials.empty()) throw Error(ErrorCode::kUndefinedMetric, "accuracy over zero trials");
  std::size_t correct = 0;
  for (const HomographyTrial& t : trials) {
    if (!t.h_est) continue;
    if (homography_correct(t.h_gt, *t.h_est, eps, width, height)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(trials.size());
}

}  // namespace fpc
