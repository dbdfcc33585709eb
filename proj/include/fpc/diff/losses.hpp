#pragma once

#include <span>

#include "fpc/diff/ops.hpp"
#include "fpc/geometry/homography.hpp"

namespace fpc::diff {

struct FocalParams {
  double alpha = 0.25;
  double gamma = 2.0;
};

/// Sigmoid focal loss averaged over valid pixels. Soft targets in [0, 1]
/// interpolate linearly between the positive and negative terms. Evaluated
/// through log-sigmoid so large-magnitude logits stay finite.
Var focal_loss(Tape& tape, Var logits, const Array& target, Valid valid = {},
               FocalParams params = {});

// Mean Huber(pred - target) over valid pixels.
Var huber_loss(Tape& tape, Var pred, const Array& target, Valid valid, double delta);

/// Per-sample KL(S(target) || S(logits)) with both softmaxes taken over the
/// sample's valid pixels only, i.e. sum r (log r - log q); averaged over
/// the batch. Every sample needs >= 2 valid pixels.
Var kl_softmax_loss(Tape& tape, Var logits, const Array& target, Valid valid);

/// Inputs for the two-view consistency terms. `p` and `p_prime` are logits
/// [N, 1, H, W] for the original and warped images, `h[i]` maps sample i of
/// the original into the warped frame, and `m`, `m_prime` are the matching
/// targets. Optional validity restricts each frame further.
struct ConsistencyInputs {
  Var p;
  Var p_prime;
  std::span<const Homography> h;
  const Array* m = nullptr;
  const Array* m_prime = nullptr;
  Valid valid = {};        // over the original frame
  Valid valid_prime = {};  // over the warped frame
};

// Huber[sigmoid(warp(p, h)), m'] + Huber[sigmoid(warp(p', h^-1)), m]
Var consistency_loss_regression(Tape& tape, const ConsistencyInputs& in, double delta = 1.0);

// KL[log S(warp(p, h)), S(m')] + KL[log S(warp(p', h^-1)), S(m)]
Var consistency_loss_classification(Tape& tape, const ConsistencyInputs& in);

// Softmax of each sample (leading axis) over its valid entries; invalid
// entries come out as 0. Throws if a sample has < 2 valid entries.
Array masked_softmax(const Array& x, Valid valid);
Array masked_log_softmax(const Array& x, Valid valid);

// Scalar helpers used by losses and tests.
double softplus(double x);
double huber(double r, double delta);

}  // namespace fpc::diff
