#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fpc/core/keypoint.hpp"
#include "fpc/detector/detector.hpp"
#include "fpc/detector/harris.hpp"
#include "fpc/evalharness/report.hpp"
#include "fpc/evalharness/synth.hpp"
#include "fpc/matching/matching.hpp"
#include "fpc/pose/pose.hpp"

namespace fpc {

using KeypointPair = std::pair<std::vector<Keypoint>, std::vector<Keypoint>>;
// Produces keypoints for image_a and image_b of a pair.
using PairDetector = std::function<KeypointPair(const PairSample&)>;
using ImageDetector = std::function<std::vector<Keypoint>(const ImageGray&)>;

PairDetector per_image(ImageDetector det);
ImageDetector harris_detector(const HarrisConfig& cfg);
// Learned detector: eval forward, quantile threshold q, NMS, at most max_k.
ImageDetector learned_detector(const DetectorParams& params, double q, double nms_radius,
                               std::size_t max_k);
// Returns the known corners of a synthetic pair on both sides (exact).
KeypointPair oracle_keypoints(const PairSample& pair);

// The `budget` highest-scoring keypoints, ties by (y, x).
std::vector<Keypoint> apply_budget(std::vector<Keypoint> kps, std::size_t budget);

struct RepeatabilitySuiteConfig {
  std::vector<double> eps{1.0, 3.0, 8.0};
  std::size_t budget = 300;
};

EvalReport eval_repeatability_suite(const PairDetector& det, const std::vector<PairSample>& pairs,
                                    const RepeatabilitySuiteConfig& cfg = {});

enum class Prewarp { kNone, kGroundTruth };

struct HomographySuiteConfig {
  std::vector<double> eps{1.0, 3.0, 8.0};
  std::size_t budget = 300;
  double match_distance = 4.0;
  bool mutual = true;
  // Frame a's points are mapped into before the nearest-neighbour search.
  Prewarp prewarp = Prewarp::kGroundTruth;
  RansacConfig ransac;
};

EvalReport eval_homography_suite(const PairDetector& det, const std::vector<PairSample>& pairs,
                                 const HomographySuiteConfig& cfg = {});

// Serialized size of one pair's match payload: two coordinate pairs and a
// score per side for every match, all f32.
std::size_t match_payload_bytes(std::size_t n_matches);

/// Synthetic stereo scene: a left/right rig observes points at frame 0
/// and the left camera observes them again at frame 1. `relative` maps
/// frame-0 left-camera coordinates into the frame-1 camera.
struct StereoScene {
  std::vector<Eigen::Vector2d> left, right, next;
  Pose relative;
};

struct PoseSuiteConfig {
  std::vector<std::size_t> budgets{5, 10, 30, 100};
  std::size_t scenes = 50;
  std::size_t points = 200;
  double noise_px = 0.5;
  double outlier_fraction = 0.0;
  PinholeStereo cam;
  RansacConfig ransac;
  std::uint64_t seed = 0;
};

StereoScene synth_stereo_scene(const PoseSuiteConfig& cfg, Rng& rng);

PoseReport eval_pose_suite(const std::vector<StereoScene>& scenes, const PoseSuiteConfig& cfg);
std::vector<StereoScene> synth_stereo_scenes(const PoseSuiteConfig& cfg);

}  // namespace fpc
