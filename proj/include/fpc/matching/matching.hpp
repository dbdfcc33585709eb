#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpc/core/keypoint.hpp"
#include "fpc/geometry/homography.hpp"

namespace fpc {

/// A correspondence between two keypoint sets. There is no descriptor
/// payload: the pair is established from image coordinates alone.
struct Match {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double distance = 0.0;  // pixels, in image b's frame
};

struct PointPair {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

/// Nearest neighbour in image coordinates. Each a proposes its nearest b
/// (ties to the lower index); the proposal survives if it is within
/// max_dist and, with `mutual`, a is also b's nearest. Without `mutual`,
/// competing proposals for one b are resolved greedily by distance so each
/// keypoint is used at most once. `prewarp` maps a's points into b's frame
/// before the search. Output is sorted by index_a.
std::vector<Match> spatial_match(const std::vector<Keypoint>& kps_a,
                                 const std::vector<Keypoint>& kps_b, double max_dist,
                                 bool mutual = true,
                                 const std::optional<Homography>& prewarp = std::nullopt);

std::string matches_csv(const std::vector<Match>& matches);

std::vector<PointPair> matched_points(const std::vector<Keypoint>& kps_a,
                                      const std::vector<Keypoint>& kps_b,
                                      const std::vector<Match>& matches);

/// Fraction of keypoints from both images with a counterpart within eps
/// after mapping through the ground truth (a's points by h_gt, b's by its
/// inverse). Points whose mapping falls outside the other image are dropped
/// before counting.
double repeatability(const std::vector<Keypoint>& kps_a, const std::vector<Keypoint>& kps_b,
                     const Homography& h_gt, double eps, std::size_t width,
                     std::size_t height);

// Hartley-normalized DLT over >= 4 correspondences (a -> b).
Homography dlt_homography(std::span<const PointPair> pairs);

struct RansacConfig {
  double threshold = 3.0;  // pixels
  std::size_t max_iterations = 2000;
  double confidence = 0.995;
  std::uint64_t seed = 0;

  void validate() const;
};

// Iterations after which an all-inlier minimal sample has been drawn with
// the given confidence: smallest k with (1 - w^s)^k < 1 - confidence,
// capped at `cap`.
std::size_t ransac_required_iterations(double inlier_ratio, std::size_t sample_size,
                                       double confidence, std::size_t cap);

struct HomographyEstimate {
  Homography h;
  std::vector<std::size_t> inliers;
};

// sqrt((|h a - b|^2 + |h^-1 b - a|^2) / 2)
double symmetric_transfer_error(const Homography& h, const Homography& h_inv,
                                const PointPair& pair);

HomographyEstimate ransac_homography(std::span<const PointPair> pairs,
                                     const RansacConfig& cfg);

bool homography_correct(const Homography& h_gt, const Homography& h_est, double eps,
                        std::size_t width, std::size_t height);

struct HomographyTrial {
  Homography h_gt;
  std::optional<Homography> h_est;  // nullopt: estimation failed, counts as wrong
};

double homography_accuracy(std::span<const HomographyTrial> trials, double eps,
                           std::size_t width, std::size_t height);

}  // namespace fpc
