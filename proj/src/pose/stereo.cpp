#include <cmath>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"
#include "fpc/pose/pose.hpp"

namespace fpc {

void PinholeStereo::validate() const {
  if (!(focal > 0.0) || !(baseline > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "stereo rig needs focal > 0 and baseline > 0");
  }
}

Eigen::Vector3d triangulate_stereo(const Eigen::Vector2d& left, const Eigen::Vector2d& right,
                                   const PinholeStereo& cam) {
  cam.validate();
  if (std::abs(left.y() - right.y()) > 2.0) {
    throw Error(ErrorCode::kInvalidArgument, "stereo rows differ by more than 2 px");
  }
  const double d = left.x() - right.x();
  if (!(d > 0.1)) {
    throw Error(ErrorCode::kInvalidArgument, "disparity must exceed 0.1 px");
  }
  const double z = cam.focal * cam.baseline / d;
  return {(left.x() - cam.cx) * z / cam.focal, (left.y() - cam.cy) * z / cam.focal, z};
}

Eigen::Vector3d triangulate_stereo(const Keypoint& left, const Keypoint& right,
                                   const PinholeStereo& cam) {
  return triangulate_stereo(Eigen::Vector2d(left.x, left.y), Eigen::Vector2d(right.x, right.y),
                            cam);
}

Eigen::Vector2d project(const Eigen::Vector3d& p, const PinholeStereo& cam) {
  if (!(p.z() > 1e-12)) throw Error(ErrorCode::kPointAtInfinity, "point behind camera");
  return {cam.focal * p.x() / p.z() + cam.cx, cam.focal * p.y() / p.z() + cam.cy};
}

Eigen::Vector3d bearing(const Eigen::Vector2d& pixel, const PinholeStereo& cam) {
  return Eigen::Vector3d((pixel.x() - cam.cx) / cam.focal, (pixel.y() - cam.cy) / cam.focal,
                         1.0)
      .normalized();
}

double rotation_error(const Eigen::Matrix3d& r_est, const Eigen::Matrix3d& r_gt) {
  const double c = ((r_est.transpose() * r_gt).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double translation_error(const Eigen::Vector3d& t_est, const Eigen::Vector3d& t_gt) {
  return (t_est - t_gt).norm();
}

std::string format_pose(const Pose& pose) {
  std::string out;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out += format_double(pose.rotation(r, c)) + " ";
  }
  for (int i = 0; i < 3; ++i) {
    out += format_double(pose.translation(i));
    out += i == 2 ? "\n" : " ";
  }
  return out;
}

}  // namespace fpc
