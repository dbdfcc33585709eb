#pragma once

#include <cstddef>

#include "fpc/core/rng.hpp"
#include "fpc/geometry/homography.hpp"

namespace fpc {

struct HomographySamplerConfig {
  double perturbation = 0.15;   // per-corner jitter, fraction of side
  double rotation = 0.26;       // radians, symmetric range
  double scale_min = 0.8;
  double scale_max = 1.25;
  double translation = 0.1;     // fraction of side, symmetric range

  void validate() const;
};

/// Draws a similarity about the image center plus independent corner jitter,
/// then solves the exact 4-point map. Draws whose corners fold, come within
/// a collinear triple, or move more than half a side are rejected; after 100
/// rejections a kDegenerate error is thrown.
Homography sample_homography(const HomographySamplerConfig& cfg,
                             std::size_t width, std::size_t height, Rng& rng);

}  // namespace fpc
