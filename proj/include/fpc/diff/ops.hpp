#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fpc/diff/tape.hpp"
#include "fpc/geometry/warp.hpp"

namespace fpc::diff {

// x [N, C, H, W], w [O, C, K, K], bias [O] -> [N, O, Ho, Wo],
// Ho = (H + 2 pad - K) / stride + 1. Zero padding.
Var conv2d(Tape& tape, Var x, Var w, std::optional<Var> bias, int stride, int pad);
inline Var conv1x1(Tape& tape, Var x, Var w, std::optional<Var> bias) {
  return conv2d(tape, x, w, bias, 1, 0);
}

Var relu(Tape& tape, Var x);
Var sigmoid(Tape& tape, Var x);
Var add(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, double c);
// Samples [begin, begin + count) along the leading axis.
Var slice_batch(Tape& tape, Var x, std::size_t begin, std::size_t count);

/// Running statistics owned by a batch-norm layer. Train mode normalizes
/// with the batch statistics over (N, H, W) and updates
/// running = momentum * running + (1 - momentum) * batch (unbiased variance).
struct BatchNormState {
  Array running_mean;
  Array running_var;
  explicit BatchNormState(std::size_t channels)
      : running_mean({channels}, 0.0), running_var({channels}, 1.0) {}
};

Var batch_norm(Tape& tape, Var x, Var gamma, Var beta, BatchNormState& state, bool train,
               double momentum = 0.9, double eps = 1e-5);

// kConvGrid maps output o to source o/2, the sample grid of a stride-2 pad-1
// conv; kHalfPixel is the usual image-resize convention.
enum class ResizeGrid { kHalfPixel, kConvGrid };

// Bicubic resize of [N, C, H, W] with the Keys a = -0.5 kernel and clamped
// borders. Linear in x; backward is the transpose.
Var bicubic_resize(Tape& tape, Var x, std::size_t out_h, std::size_t out_w,
                   ResizeGrid grid = ResizeGrid::kHalfPixel);
inline Var bicubic_upsample2x(Tape& tape, Var x) {
  return bicubic_resize(tape, x, 2 * tape.value(x).dim(2), 2 * tape.value(x).dim(3));
}

// Per-sample fixed resampling of [N, 1, H, W]; samplers.size() == N.
Var warp(Tape& tape, Var x, std::span<const WarpSampler> samplers);

// Flattened per-pixel validity for a batch; empty means all valid.
using Valid = std::span<const std::uint8_t>;

}  // namespace fpc::diff
