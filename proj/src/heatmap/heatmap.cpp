#include "fpc/heatmap/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"

namespace fpc {
namespace {

void check_unit_interval(const Tensor& t) {
  for (float v : t.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw Error(ErrorCode::kInvalidArgument, "target mask value outside [0, 1]");
    }
  }
}

// Uniform grid over kept points; cell side >= radius so a query only needs
// the 3x3 block of cells around it.
class PointGrid {
 public:
  explicit PointGrid(double cell) : cell_(std::max(cell, 1.0)) {}

  bool any_within(float x, float y, double radius) const {
    const long cx = key(x), cy = key(y);
    const double r2 = radius * radius;
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        auto it = cells_.find(pack(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (const auto& [px, py] : it->second) {
          const double ex = px - x, ey = py - y;
          if (ex * ex + ey * ey <= r2) return true;
        }
      }
    }
    return false;
  }

  void insert(float x, float y) { cells_[pack(key(x), key(y))].emplace_back(x, y); }

 private:
  long key(float v) const { return static_cast<long>(std::floor(v / cell_)); }
  static long long pack(long x, long y) {
    return (static_cast<long long>(x) << 32) ^ static_cast<long long>(y & 0xFFFFFFFF);
  }

  double cell_;
  std::unordered_map<long long, std::vector<std::pair<float, float>>> cells_;
};

}  // namespace

Heatmap::Heatmap(Tensor t) : logits(std::move(t)) {
  if (logits.rank() != 2) throw Error(ErrorCode::kShapeMismatch, "heatmap must be [H, W]");
}

TargetMask::TargetMask(Tensor t, MaskKind k) : values(std::move(t)), kind(k) {
  if (values.rank() != 2) throw Error(ErrorCode::kShapeMismatch, "target mask must be [H, W]");
  check_unit_interval(values);
  if (kind == MaskKind::kBinary) {
    for (float v : values.data()) {
      if (v != 0.0f && v != 1.0f) {
        throw Error(ErrorCode::kInvalidArgument, "binary mask holds a value other than 0/1");
      }
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double quantile(std::vector<float> values, double q) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "quantile of empty set");
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<long>(lo), values.end());
  const double v_lo = values[lo];
  double v_hi = v_lo;
  if (hi != lo) {
    v_hi = *std::min_element(values.begin() + static_cast<long>(lo) + 1, values.end());
  }
  return v_lo + (pos - static_cast<double>(lo)) * (v_hi - v_lo);
}

TargetMask quantile_threshold(const Heatmap& hm, double q) {
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::kInvalidArgument, "quantile must lie in (0, 1)");
  const auto data = hm.logits.data();
  const double t = quantile(std::vector<float>(data.begin(), data.end()), q);
  Tensor out(hm.logits.shape());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i] > t ? 1.0f : 0.0f;
  return TargetMask(std::move(out), MaskKind::kBinary);
}

std::vector<Keypoint> nms(std::vector<Keypoint> kps, double radius, std::size_t max_k) {
  if (!(radius >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "NMS radius must be >= 0");
  std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  std::vector<Keypoint> kept;
  PointGrid grid(radius);
  for (const Keypoint& kp : kps) {
    if (kept.size() >= max_k) break;
    if (grid.any_within(kp.x, kp.y, radius)) continue;
    grid.insert(kp.x, kp.y);
    kept.push_back(kp);
  }
  return kept;
}

std::vector<Keypoint> extract_keypoints(const Heatmap& hm, double q, double nms_radius,
                                        std::size_t max_k) {
  const TargetMask selected = quantile_threshold(hm, q);
  constexpr float kBelowOne = 1.0f - std::numeric_limits<float>::epsilon() / 2;
  std::vector<Keypoint> candidates;
  for (std::size_t r = 0; r < hm.height(); ++r) {
    for (std::size_t c = 0; c < hm.width(); ++c) {
      if (selected.values.at(r, c) == 0.0f) continue;
      float score = static_cast<float>(sigmoid(hm.logits.at(r, c)));
      score = std::clamp(score, std::numeric_limits<float>::denorm_min(), kBelowOne);
      candidates.push_back({static_cast<float>(c), static_cast<float>(r), score});
    }
  }
  return nms(std::move(candidates), nms_radius, max_k);
}

long reflect_index(long i, long n) {
  const long period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be > 0");
  const long half = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  double sum = 0.0;
  for (long i = -half; i <= half; ++i) {
    const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + half)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<double> gaussian_blur(const std::vector<double>& img, std::size_t height,
                                  std::size_t width, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const long half = static_cast<long>(k.size() / 2);
  const long h = static_cast<long>(height), w = static_cast<long>(width);
  std::vector<double> tmp(img.size()), out(img.size());
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long j = -half; j <= half; ++j) {
        acc += k[static_cast<std::size_t>(j + half)] * img[r * w + reflect_index(c + j, w)];
      }
      tmp[r * w + c] = acc;
    }
  }
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      double acc = 0.0;
      for (long j = -half; j <= half; ++j) {
        acc += k[static_cast<std::size_t>(j + half)] * tmp[reflect_index(r + j, h) * w + c];
      }
      out[r * w + c] = acc;
    }
  }
  return out;
}

TargetMask gaussian_filter(const TargetMask& mask, double sigma) {
  const auto src = mask.values.data();
  const std::vector<double> blurred =
      gaussian_blur(std::vector<double>(src.begin(), src.end()), mask.height(), mask.width(), sigma);
  Tensor out(mask.values.shape());
  for (std::size_t i = 0; i < blurred.size(); ++i) {
    out[i] = static_cast<float>(std::clamp(blurred[i], 0.0, 1.0));
  }
  return TargetMask(std::move(out), MaskKind::kSmoothed);
}

TargetMask label_smooth(const TargetMask& mask, double eps) {
  if (!(eps >= 0.0 && eps < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "label smoothing eps must lie in [0, 0.5)");
  }
  if (eps == 0.0) return mask;
  Tensor out(mask.values.shape());
  const auto src = mask.values.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = src[i];
    out[i] = static_cast<float>(v * (1.0 - eps) + (1.0 - v) * eps);
  }
  return TargetMask(std::move(out), MaskKind::kSmoothed);
}

std::vector<HistogramBin> activation_histogram(const Heatmap& hm, std::size_t bins, double lo,
                                               double hi) {
  if (bins < 1 || !(lo < hi)) {
    throw Error(ErrorCode::kInvalidArgument, "histogram needs bins >= 1 and lo < hi");
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> hist(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    hist[i].center = lo + (static_cast<double>(i) + 0.5) * width;
  }
  const long last = static_cast<long>(bins) - 1;
  for (float v : hm.logits.data()) {
    const long idx = static_cast<long>(std::floor((static_cast<double>(v) - lo) / width));
    hist[static_cast<std::size_t>(std::clamp(idx, 0L, last))].count++;
  }
  return hist;
}

std::string histogram_csv(const std::vector<HistogramBin>& hist) {
  std::string out = "bin_center,count\n";
  for (const HistogramBin& b : hist) {
    out += format_double(b.center) + "," + std::to_string(b.count) + "\n";
  }
  return out;
}

}  // namespace fpc
