#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "fpc/core/error.hpp"
#include "fpc/core/rng.hpp"
#include "fpc/pose/pose.hpp"

namespace fpc {
namespace {

double reprojection_error(const Pose& pose, const Eigen::Vector3d& world,
                         const Eigen::Vector2d& pixel, const PinholeStereo& cam) {
  const Eigen::Vector3d pc = pose.rotation * world + pose.translation;
  if (!(pc.z() > 1e-12)) return std::numeric_limits<double>::infinity();
  return (project(pc, cam) - pixel).norm();
}

}  // namespace

PoseEstimate ransac_p3p(std::span<const Eigen::Vector3d> world,
                        std::span<const Eigen::Vector2d> image, const PinholeStereo& cam,
                        const RansacConfig& cfg) {
  cfg.validate();
  cam.validate();
  if (world.size() != image.size()) {
    throw Error(ErrorCode::kShapeMismatch, "world/image correspondence counts differ");
  }
  const std::size_t n = world.size();
  if (n < 4) throw Error(ErrorCode::kInsufficientData, "P3P RANSAC needs at least 4 points");

  Rng rng(cfg.seed);
  std::optional<Pose> best_pose;
  std::vector<std::size_t> best_inliers;
  double best_residual = std::numeric_limits<double>::infinity();
  std::size_t needed = cfg.max_iterations;
  for (std::size_t it = 0; it < needed; ++it) {
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = rng.uniform_index(n);
        fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k;
      } while (!fresh);
    }
    std::vector<Pose> candidates;
    try {
      candidates = p3p_solve({world[idx[0]], world[idx[1]], world[idx[2]]},
                             {bearing(image[idx[0]], cam), bearing(image[idx[1]], cam),
                              bearing(image[idx[2]], cam)});
    } catch (const Error&) {
      continue;
    }
    if (candidates.empty()) continue;
    const Pose* chosen = nullptr;
    double chosen_err = std::numeric_limits<double>::infinity();
    for (const Pose& c : candidates) {
      const double e = reprojection_error(c, world[idx[3]], image[idx[3]], cam);
      if (e < chosen_err) {
        chosen_err = e;
        chosen = &c;
      }
    }
    if (!chosen) continue;

    std::vector<std::size_t> inliers;
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = reprojection_error(*chosen, world[i], image[i], cam);
      if (e <= cfg.threshold) {
        inliers.push_back(i);
        residual += e * e;
      }
    }
    const bool improves = !best_pose || inliers.size() > best_inliers.size() ||
                          (inliers.size() == best_inliers.size() && residual < best_residual);
    if (improves) {
      best_pose = *chosen;
      best_inliers = std::move(inliers);
      best_residual = residual;
      const double w = static_cast<double>(best_inliers.size()) / static_cast<double>(n);
      needed = std::min(needed,
                        ransac_required_iterations(w, 4, cfg.confidence, cfg.max_iterations));
    }
  }
  if (!best_pose || best_inliers.size() < 4) {
    throw Error(ErrorCode::kEstimationFailed, "P3P RANSAC found no model with >= 4 inliers");
  }
  return {*best_pose, best_inliers};
}

}  // namespace fpc
