#include "fpc/detector/harris.hpp"

#include <algorithm>
#include <cmath>

#include "fpc/core/error.hpp"

namespace fpc {

std::vector<double> harris_response(const ImageGray& img, double k, double sigma) {
  const long h = static_cast<long>(img.height()), w = static_cast<long>(img.width());
  auto px = [&](long r, long c) {
    return static_cast<double>(img.at(static_cast<std::size_t>(reflect_index(r, h)),
                                      static_cast<std::size_t>(reflect_index(c, w))));
  };
  const std::size_t n = img.pixels().size();
  std::vector<double> ixx(n), iyy(n), ixy(n);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const double gx = (px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2 * px(r, c - 1) + px(r + 1, c - 1));
      const double gy = (px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2 * px(r - 1, c) + px(r - 1, c + 1));
      const std::size_t i = static_cast<std::size_t>(r * w + c);
      ixx[i] = gx * gx;
      iyy[i] = gy * gy;
      ixy[i] = gx * gy;
    }
  }
  ixx = gaussian_blur(ixx, img.height(), img.width(), sigma);
  iyy = gaussian_blur(iyy, img.height(), img.width(), sigma);
  ixy = gaussian_blur(ixy, img.height(), img.width(), sigma);
  std::vector<double> resp(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tr = ixx[i] + iyy[i];
    resp[i] = ixx[i] * iyy[i] - ixy[i] * ixy[i] - k * tr * tr;
  }
  return resp;
}

std::vector<Keypoint> harris_keypoints(const ImageGray& img, const HarrisConfig& cfg) {
  if (cfg.top_n == 0) throw Error(ErrorCode::kInvalidArgument, "harris top_n must be >= 1");
  const std::vector<double> resp = harris_response(img, cfg.k, cfg.sigma);
  const double rmax = *std::max_element(resp.begin(), resp.end());
  if (!(rmax > 0.0)) return {};
  const double floor_value = cfg.relative_threshold * rmax;
  const std::size_t w = img.width();
  std::vector<Keypoint> cands;
  for (std::size_t i = 0; i < resp.size(); ++i) {
    if (resp[i] > 0.0 && resp[i] >= floor_value) {
      cands.push_back({static_cast<float>(i % w), static_cast<float>(i / w),
                       static_cast<float>(resp[i] / rmax)});
    }
  }
  return nms(std::move(cands), cfg.nms_radius, cfg.top_n);
}

TargetMask keypoints_to_mask(const std::vector<Keypoint>& kps, std::size_t height,
                             std::size_t width) {
  Tensor m({height, width}, 0.0f);
  for (const Keypoint& kp : kps) {
    const long r = std::lround(kp.y), c = std::lround(kp.x);
    if (r >= 0 && c >= 0 && r < static_cast<long>(height) && c < static_cast<long>(width)) {
      m.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 1.0f;
    }
  }
  return TargetMask(std::move(m), MaskKind::kBinary);
}

TargetMask harris_teacher(const ImageGray& img, const HarrisConfig& cfg) {
  return keypoints_to_mask(harris_keypoints(img, cfg), img.height(), img.width());
}

TargetMask harris_teacher(const ImageGray& img, double k, std::size_t top_n, double nms_radius) {
  HarrisConfig cfg;
  cfg.k = k;
  cfg.top_n = top_n;
  cfg.nms_radius = nms_radius;
  return harris_teacher(img, cfg);
}

}  // namespace fpc
