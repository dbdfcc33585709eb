#pragma once

#include <array>
#include <string>

#include <Eigen/Core>

namespace fpc {

/// 3x3 projective map acting on pixel coordinates (x = column, y = row).
/// Invertible by construction; stored with m(2,2) = 1 whenever
/// |m(2,2)| > 1e-12.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography translation(double tx, double ty);

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

 private:
  Eigen::Matrix3d m_;
};

Eigen::Vector2d hom_apply(const Homography& h, const Eigen::Vector2d& pt);
Homography hom_invert(const Homography& h);
// Result maps p to a(b(p)).
Homography hom_compose(const Homography& a, const Homography& b);

// Exact map taking src[i] to dst[i]; solves the 8x8 system with h33 = 1.
Homography homography_from_corners(const std::array<Eigen::Vector2d, 4>& src,
                                   const std::array<Eigen::Vector2d, 4>& dst);

// Mean distance between gt- and est-mapped image corners (0,0), (w-1,0),
// (0,h-1), (w-1,h-1).
double corner_error(const Homography& h_gt, const Homography& h_est,
                    std::size_t width, std::size_t height);

std::array<Eigen::Vector2d, 4> image_corners(std::size_t width,
                                             std::size_t height);

// ".hom" text: 9 whitespace-separated decimals, row-major.
std::string format_hom(const Homography& h);
Homography parse_hom(const std::string& text);
Homography load_hom(const std::string& path);
void save_hom(const Homography& h, const std::string& path);

}  // namespace fpc
