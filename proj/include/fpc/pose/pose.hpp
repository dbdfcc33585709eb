#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpc/core/keypoint.hpp"
#include "fpc/matching/matching.hpp"

namespace fpc {

/// Rectified stereo rig: both cameras share focal length and principal
/// point; the right camera sits `baseline` meters along +x.
struct PinholeStereo {
  double focal = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  double baseline = 0.5;

  void validate() const;
};

/// Camera-from-world rigid transform: x_cam = rotation * x_world + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

Eigen::Vector3d triangulate_stereo(const Eigen::Vector2d& left, const Eigen::Vector2d& right,
                                   const PinholeStereo& cam);
Eigen::Vector3d triangulate_stereo(const Keypoint& left, const Keypoint& right,
                                   const PinholeStereo& cam);

// Pixel projection of a camera-frame point through the left camera.
Eigen::Vector2d project(const Eigen::Vector3d& point_cam, const PinholeStereo& cam);
Eigen::Vector3d bearing(const Eigen::Vector2d& pixel, const PinholeStereo& cam);

/// Three-point resection. Eliminating one distance ratio from the two
/// law-of-cosines constraints leaves a quartic in the other; every real
/// positive root is lifted back to a pose. Returns up to four poses, each of
/// which maps world[i] onto bearings[i] within 1e-6 rad.
std::vector<Pose> p3p_solve(const std::array<Eigen::Vector3d, 3>& world,
                            const std::array<Eigen::Vector3d, 3>& bearings);

// Real roots of c[0] + c[1] x + ... + c[n] x^n via companion-matrix
// eigenvalues, each polished with one Newton step. Near-real pairs (imaginary
// part within 1e-6 relative) are kept; a close pair is merged into one root
// refined on the derivative. Sorted ascending.
std::vector<double> real_polynomial_roots(const std::vector<double>& coeffs);

struct PoseEstimate {
  Pose pose;
  std::vector<std::size_t> inliers;
};

/// P3P inside RANSAC. Each iteration draws four correspondences, solves on
/// the first three and keeps the candidate with the smallest reprojection
/// error on the fourth. Inliers have pixel reprojection error <= threshold.
PoseEstimate ransac_p3p(std::span<const Eigen::Vector3d> world,
                        std::span<const Eigen::Vector2d> image, const PinholeStereo& cam,
                        const RansacConfig& cfg);

double rotation_error(const Eigen::Matrix3d& r_est, const Eigen::Matrix3d& r_gt);
double translation_error(const Eigen::Vector3d& t_est, const Eigen::Vector3d& t_gt);

// 12 decimals on one line: rotation row-major, then translation.
std::string format_pose(const Pose& pose);

}  // namespace fpc
