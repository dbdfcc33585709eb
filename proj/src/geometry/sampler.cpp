#include "fpc/geometry/sampler.hpp"

#include <array>
#include <cmath>

#include "fpc/core/error.hpp"

namespace fpc {
namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a, v = c - a;
  return u.x() * v.y() - u.y() * v.x();
}

// Corners in image_corners() order form the loop 0 -> 1 -> 3 -> 2.
bool convex_non_degenerate(const std::array<Eigen::Vector2d, 4>& q, double min_area) {
  const std::array<int, 4> loop = {0, 1, 3, 2};
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const double z = cross(q[loop[i]], q[loop[(i + 1) % 4]], q[loop[(i + 2) % 4]]);
    if (std::abs(z) < min_area) return false;
    const int s = z > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return true;
}

}  // namespace

void HomographySamplerConfig::validate() const {
  if (!(perturbation >= 0.0 && perturbation < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "perturbation must lie in [0, 0.5)");
  }
  if (!(scale_min > 0.0 && scale_max >= scale_min)) {
    throw Error(ErrorCode::kInvalidArgument, "scale range must be positive and ordered");
  }
  if (!(rotation >= 0.0) || !(translation >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rotation/translation ranges must be >= 0");
  }
}

Homography sample_homography(const HomographySamplerConfig& cfg, std::size_t width,
                             std::size_t height, Rng& rng) {
  cfg.validate();
  if (width < 8 || height < 8) {
    throw Error(ErrorCode::kInvalidArgument, "sampler needs images of at least 8x8");
  }
  const double w = static_cast<double>(width), h = static_cast<double>(height);
  const std::array<Eigen::Vector2d, 4> src = image_corners(width, height);
  const Eigen::Vector2d center((w - 1.0) / 2.0, (h - 1.0) / 2.0);
  const double min_area = 1e-3 * w * h;

  for (int attempt = 0; attempt < 100; ++attempt) {
    const double angle = rng.uniform(-cfg.rotation, cfg.rotation);
    const double scale =
        std::exp(rng.uniform(std::log(cfg.scale_min), std::log(cfg.scale_max)));
    const Eigen::Vector2d shift(rng.uniform(-cfg.translation, cfg.translation) * w,
                                rng.uniform(-cfg.translation, cfg.translation) * h);
    Eigen::Matrix2d rot;
    rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);

    std::array<Eigen::Vector2d, 4> dst;
    bool in_bounds = true;
    for (int i = 0; i < 4; ++i) {
      const Eigen::Vector2d jitter(rng.uniform(-cfg.perturbation, cfg.perturbation) * w,
                                   rng.uniform(-cfg.perturbation, cfg.perturbation) * h);
      dst[i] = center + scale * (rot * (src[i] - center)) + shift + jitter;
      const Eigen::Vector2d d = dst[i] - src[i];
      if (std::abs(d.x()) >= 0.5 * w || std::abs(d.y()) >= 0.5 * h) in_bounds = false;
    }
    if (!in_bounds || !convex_non_degenerate(dst, min_area)) continue;
    try {
      return homography_from_corners(src, dst);
    } catch (const Error&) {
      continue;
    }
  }
  throw Error(ErrorCode::kDegenerate, "homography sampler rejected 100 draws");
}

}  // namespace fpc
