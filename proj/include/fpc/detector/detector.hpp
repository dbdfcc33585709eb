#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fpc/core/image.hpp"
#include "fpc/core/rng.hpp"
#include "fpc/diff/ops.hpp"
#include "fpc/heatmap/heatmap.hpp"

namespace fpc {

/// Four conv-BN-ReLU stages at strides 2, 4, 8, 16 feeding a top-down FPN
/// with 1x1 laterals and a 1-channel 1x1 conv + BN head.
struct DetectorConfig {
  std::array<std::size_t, 4> widths{8, 12, 20, 48};
  std::size_t fpn_width = 32;
  std::size_t input_height = 120;
  std::size_t input_width = 160;

  void validate() const;
  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

/// Every tensor of the network keyed by layer name, including batch-norm
/// running statistics (names ending in ".running_mean" / ".running_var").
struct DetectorParams {
  DetectorConfig config;
  std::map<std::string, TensorD> tensors;

  const TensorD& at(const std::string& name) const;
  TensorD& at(const std::string& name);
};

// Names of all gradient-carrying tensors, in a fixed order.
std::vector<std::string> trainable_names(const DetectorConfig& cfg);
// Expected shape of every tensor the config implies.
std::map<std::string, Shape> expected_shapes(const DetectorConfig& cfg);

DetectorParams build_detector(const DetectorConfig& cfg, Rng& rng);

// Rounds every tensor to the nearest f32, the checkpoint precision.
void round_to_float(DetectorParams& params);

// Spatial dims must be multiples of 8 and at least 16.
void check_input_dims(std::size_t height, std::size_t width);

/// Binds the trainable tensors as tape leaves and runs the network on
/// [N, 1, H, W] batches. In train mode batch norm uses batch statistics and
/// updates the running stats in `params`.
class DetectorGraph {
 public:
  DetectorGraph(diff::Tape& tape, DetectorParams& params);

  diff::Var forward(diff::Var input, bool train);

  const std::vector<std::string>& names() const { return names_; }
  diff::Var var(const std::string& name) const { return vars_.at(name); }
  std::vector<const diff::Array*> grads() const;
  std::vector<diff::Array*> param_ptrs();

 private:
  diff::Var conv_bn(diff::Var x, const std::string& prefix, int stride, int pad, bool train,
                    bool relu_after);

  diff::Tape& tape_;
  DetectorParams& params_;
  std::vector<std::string> names_;
  std::map<std::string, diff::Var> vars_;
};

diff::Array images_to_batch(std::span<const ImageGray> images);

// Eval-mode forward of a single image; logits at input resolution.
Heatmap detector_forward(const DetectorParams& params, const ImageGray& img);

}  // namespace fpc
