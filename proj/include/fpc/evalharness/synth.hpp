#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fpc/core/image.hpp"
#include "fpc/core/rng.hpp"
#include "fpc/geometry/homography.hpp"
#include "fpc/geometry/sampler.hpp"
#include "fpc/geometry/warp.hpp"

namespace fpc {

struct SynthScene {
  ImageGray image;
  std::vector<Eigen::Vector2d> corners;  // (x, y) in pixels
  std::vector<std::size_t> shape_corners;  // corners contributed by each shape, in order
};

/// Shaded background with n_shapes triangles, quads and checkerboards placed
/// in disjoint grid cells. Edges are anti-aliased by 4x4 supersampling.
/// Every returned corner is an exact vertex of a drawn shape (checkerboards
/// contribute all their grid crossings).
SynthScene synth_scene(Rng& rng, std::size_t width, std::size_t height, std::size_t n_shapes);

// One bright axis-aligned square [x0, x0 + side] x [y0, y0 + side] on black.
SynthScene synth_square(std::size_t width, std::size_t height, double x0, double y0,
                        double side);

struct PairSample {
  std::string id;
  std::string split = "all";
  ImageGray image_a;
  ImageGray image_b;
  Homography h_gt;  // a -> b
  // Known corner positions, when the pair came from a synthetic scene.
  std::vector<Eigen::Vector2d> corners_a;
};

// image_b = clamp(gain * warp(image_a, h) + bias + noise).
PairSample make_pair(const ImageGray& img, const HomographySamplerConfig& warp,
                     const PhotometricConfig& photo, Rng& rng);

/// Seeded synthetic benchmark: pair i uses scene and warp streams derived
/// from (seed, i), so any prefix of a larger set is identical to a smaller one.
std::vector<PairSample> synthetic_pairs(std::size_t count, std::uint64_t seed,
                                        std::size_t width = 160, std::size_t height = 120,
                                        std::size_t n_shapes = 6,
                                        const HomographySamplerConfig& warp = {},
                                        const PhotometricConfig& photo = {});

/// Reads a directory with "pairs.txt": one pair per line,
/// "<id> <image_a.pgm> <image_b.pgm> <h.hom> [split]", paths relative to
/// the directory, '#' starts a comment.
std::vector<PairSample> load_pairs(const std::string& dir);

}  // namespace fpc
