#include <algorithm>
#include <array>
#include <optional>
#include <cmath>
#include <limits>

#include "fpc/core/error.hpp"
#include "fpc/core/rng.hpp"
#include "fpc/matching/matching.hpp"

namespace fpc {

void RansacConfig::validate() const {
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "RANSAC threshold must be > 0");
  if (max_iterations < 1) throw Error(ErrorCode::kInvalidArgument, "RANSAC needs >= 1 iteration");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "RANSAC confidence must lie in (0, 1)");
  }
}

double symmetric_transfer_error(const Homography& h, const Homography& h_inv,
                                const PointPair& pair) {
  const double forward = (hom_apply(h, pair.a) - pair.b).squaredNorm();
  const double backward = (hom_apply(h_inv, pair.b) - pair.a).squaredNorm();
  return std::sqrt(0.5 * (forward + backward));
}

namespace {

struct Score {
  std::vector<std::size_t> inliers;
  double residual = std::numeric_limits<double>::infinity();
};

Score score_model(const Homography& h, std::span<const PointPair> pairs, double threshold) {
  Score s;
  const Homography h_inv = hom_invert(h);
  s.residual = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double e;
    try {
      e = symmetric_transfer_error(h, h_inv, pairs[i]);
    } catch (const Error&) {
      continue;
    }
    if (e <= threshold) {
      s.inliers.push_back(i);
      s.residual += e * e;
    }
  }
  return s;
}

bool better(const Score& a, const Score& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.residual < b.residual;
}

}  // namespace

std::size_t ransac_required_iterations(double inlier_ratio, std::size_t sample_size,
                                       double confidence, std::size_t cap) {
  const double p_good = std::pow(inlier_ratio, static_cast<double>(sample_size));
  if (p_good >= 1.0) return 1;
  if (p_good <= 0.0) return cap;
  const double k = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (!std::isfinite(k) || k >= static_cast<double>(cap)) return cap;
  return static_cast<std::size_t>(std::ceil(std::max(k, 1.0)));
}

HomographyEstimate ransac_homography(std::span<const PointPair> pairs,
                                     const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = pairs.size();
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientData, "RANSAC needs at least 4 matches");
  }
  Rng rng(cfg.seed);
  std::optional<Homography> best_h;
  Score best;
  best.inliers.clear();
  std::size_t needed = cfg.max_iterations;
  std::array<PointPair, 4> sample;
  for (std::size_t it = 0; it < needed; ++it) {
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = rng.uniform_index(n);
        fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k;
      } while (!fresh);
      sample[k] = pairs[idx[k]];
    }
    Homography h;
    try {
      h = dlt_homography(sample);
    } catch (const Error&) {
      continue;
    }
    Score s = score_model(h, pairs, cfg.threshold);
    if (!best_h || better(s, best)) {
      best = std::move(s);
      best_h = h;
      const double w = static_cast<double>(best.inliers.size()) / static_cast<double>(n);
      needed = std::min(needed, ransac_required_iterations(w, 4, cfg.confidence, cfg.max_iterations));
    }
  }
  if (!best_h || best.inliers.size() < 4) {
    throw Error(ErrorCode::kEstimationFailed, "RANSAC found no model with >= 4 inliers");
  }
  std::vector<PointPair> support;
  support.reserve(best.inliers.size());
  for (std::size_t i : best.inliers) support.push_back(pairs[i]);
  Homography refined = *best_h;
  try {
    refined = dlt_homography(support);
  } catch (const Error&) {
  }
  return {refined, best.inliers};
}

}  // namespace fpc
