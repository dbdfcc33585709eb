#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fpc/core/keypoint.hpp"
#include "fpc/core/tensor.hpp"

namespace fpc {

/// Raw pre-sigmoid keypoint scores, [H, W].
struct Heatmap {
  Tensor logits;

  explicit Heatmap(Tensor t);
  std::size_t height() const { return logits.dim(0); }
  std::size_t width() const { return logits.dim(1); }
};

enum class MaskKind { kBinary, kSmoothed };

/// Per-pixel target in [0, 1]; binary masks hold only 0 and 1.
struct TargetMask {
  Tensor values;
  MaskKind kind = MaskKind::kBinary;

  TargetMask(Tensor t, MaskKind k);
  std::size_t height() const { return values.dim(0); }
  std::size_t width() const { return values.dim(1); }
};

struct HistogramBin {
  double center = 0.0;
  std::size_t count = 0;
};

// Sample quantile with linear interpolation between order statistics
// (position q * (n - 1)).
double quantile(std::vector<float> values, double q);

// Pixels whose logit strictly exceeds the q-quantile of the map.
TargetMask quantile_threshold(const Heatmap& hm, double q);

// Greedy suppression by descending score, ties by (y, x). Keeps at most
// max_k points, none within `radius` of another.
std::vector<Keypoint> nms(std::vector<Keypoint> kps, double radius, std::size_t max_k);

std::vector<Keypoint> extract_keypoints(const Heatmap& hm, double q, double nms_radius,
                                        std::size_t max_k);

// Normalized 1D Gaussian taps of half-width ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

// Separable Gaussian with half-sample symmetric ("reflect") boundary.
std::vector<double> gaussian_blur(const std::vector<double>& img, std::size_t height,
                                  std::size_t width, double sigma);

TargetMask gaussian_filter(const TargetMask& mask, double sigma);
TargetMask label_smooth(const TargetMask& mask, double eps);

std::vector<HistogramBin> activation_histogram(const Heatmap& hm, std::size_t bins,
                                               double lo, double hi);
std::string histogram_csv(const std::vector<HistogramBin>& hist);

// Maps an out-of-range index into [0, n) by mirror reflection (edge repeated).
long reflect_index(long i, long n);

double sigmoid(double x);

}  // namespace fpc
