#pragma once

#include <cstddef>
#include <vector>

#include "fpc/core/image.hpp"
#include "fpc/core/keypoint.hpp"
#include "fpc/heatmap/heatmap.hpp"

namespace fpc {

struct HarrisConfig {
  double k = 0.05;
  std::size_t top_n = 50;
  double nms_radius = 4.0;
  double sigma = 1.0;
  // Responses below this fraction of the image maximum are ignored.
  double relative_threshold = 0.01;
};

// det(M) - k trace(M)^2 of the Gaussian-smoothed Sobel structure tensor.
std::vector<double> harris_response(const ImageGray& img, double k, double sigma = 1.0);

// Strongest positive-response corners after NMS; score = R / max R.
std::vector<Keypoint> harris_keypoints(const ImageGray& img, const HarrisConfig& cfg);

TargetMask harris_teacher(const ImageGray& img, double k, std::size_t top_n, double nms_radius);
TargetMask harris_teacher(const ImageGray& img, const HarrisConfig& cfg);

// Binary mask with a 1 at the nearest pixel of every keypoint.
TargetMask keypoints_to_mask(const std::vector<Keypoint>& kps, std::size_t height,
                             std::size_t width);

}  // namespace fpc
