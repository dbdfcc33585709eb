#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fpc/core/rng.hpp"
#include "fpc/detector/detector.hpp"
#include "fpc/diff/adam.hpp"
#include "fpc/diff/losses.hpp"
#include "fpc/geometry/sampler.hpp"

namespace fpc {

enum class ConsistencyMode { kRegression, kClassification };

// Which mask variant plays m, m' inside the consistency term.
enum class ConsistencyTarget {
  kStage2,    // Gaussian filtered, then label smoothed (same as the focal target)
  kGaussian,  // Gaussian filtered only
  kBinary,    // raw teacher mask
};

struct TrainConfig {
  diff::AdamConfig adam;  // lr 1e-3, betas (0.9, 0.999)
  std::size_t batch = 8;
  std::size_t epochs1 = 10;
  std::size_t epochs2 = 6;
  ConsistencyMode mode = ConsistencyMode::kRegression;
  ConsistencyTarget consistency_target = ConsistencyTarget::kStage2;
  double huber_delta = 1.0;
  double gaussian_sigma = 1.0;
  double label_smoothing = 0.1;
  double lambda_c = 1.0;
  diff::FocalParams focal;
  HomographySamplerConfig warp;
  PhotometricConfig photometric;  // applied to the warped view in stage 2
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainSample {
  ImageGray image;
  TargetMask mask;  // binary teacher mask, same size as the image
};

struct LossRecord {
  std::size_t stage = 1;
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double loss = 0.0;
};

struct TrainResult {
  DetectorParams params;
  std::vector<LossRecord> trace;  // one row per optimizer step
};

/// Shuffled index batches for one epoch. A trailing batch of one sample
/// is merged into the previous batch because train-mode batch norm needs
/// at least two samples.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, Rng& rng);

// Stage-2 inputs for one batch: images, their warps and all targets.
struct PairBatch {
  diff::Array images;        // [N, 1, H, W]
  diff::Array warped;        // [N, 1, H, W]
  std::vector<Homography> h; // image -> warped
  diff::Array target;        // focal targets
  diff::Array target_prime;
  diff::Array m;             // consistency targets
  diff::Array m_prime;
  std::vector<std::uint8_t> valid_prime;  // warp validity in the warped frame
};

PairBatch make_pair_batch(const std::vector<TrainSample>& data,
                          const std::vector<std::size_t>& indices, const TrainConfig& cfg,
                          Rng& rng);

// Moves the positive pixels of a teacher mask through h (nearest pixel).
TargetMask warp_mask_points(const TargetMask& mask, const Homography& h);

// label_smooth(gaussian_filter(mask)).
TargetMask stage2_target(const TargetMask& mask, const TrainConfig& cfg);

// One Adam step on the focal loss; returns the loss before the update.
double stage1_step(DetectorParams& params, diff::AdamState& adam,
                   const std::vector<TrainSample>& data, const std::vector<std::size_t>& indices,
                   const TrainConfig& cfg);

// One Adam step on focal(p) + focal(p') + lambda_c * L_c.
double stage2_step(DetectorParams& params, diff::AdamState& adam, const PairBatch& batch,
                   const TrainConfig& cfg);

/// Both stages start from fresh Adam moments and return parameters rounded
/// to f32 so a checkpoint round trip is lossless. A non-finite loss throws
/// kDivergence.
TrainResult train_stage1(const std::vector<TrainSample>& data, DetectorParams params,
                         const TrainConfig& cfg);
TrainResult train_stage2(const std::vector<TrainSample>& data, DetectorParams params,
                         const TrainConfig& cfg);

/// Held-out consistency loss: the configured L_c (regression or
/// classification) between eval-mode logits of each sample and of its warp
/// by h, against the sample's teacher mask moved through h. Averaged over
/// samples.
double consistency_residual(const DetectorParams& params, const std::vector<TrainSample>& samples,
                            const std::vector<Homography>& hs, const TrainConfig& cfg);

// Mean |sigmoid(warp(p, h)) - sigmoid(p')| over warp-valid pixels.
double warp_disagreement(const DetectorParams& params, const std::vector<ImageGray>& images,
                         const std::vector<Homography>& hs);

std::string loss_trace_csv(const std::vector<LossRecord>& trace);

}  // namespace fpc
