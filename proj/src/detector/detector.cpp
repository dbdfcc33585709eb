#include "fpc/detector/detector.hpp"

#include <cmath>

#include "fpc/core/error.hpp"

namespace fpc {
namespace {

std::string stage(std::size_t k) { return "stage" + std::to_string(k); }
std::string lateral(std::size_t k) { return "lateral" + std::to_string(k); }

void add_bn(std::map<std::string, Shape>& out, const std::string& prefix, std::size_t c) {
  out[prefix + ".bn.gamma"] = {c};
  out[prefix + ".bn.beta"] = {c};
  out[prefix + ".bn.running_mean"] = {c};
  out[prefix + ".bn.running_var"] = {c};
}

bool is_running_stat(const std::string& name) {
  return name.ends_with(".running_mean") || name.ends_with(".running_var");
}

}  // namespace

void DetectorConfig::validate() const {
  std::size_t widest = 0;
  for (std::size_t w : widths) {
    if (w == 0) throw Error(ErrorCode::kInvalidArgument, "stage widths must be positive");
    widest = std::max(widest, w);
  }
  if (fpn_width == 0 || fpn_width > 4 * widest) {
    throw Error(ErrorCode::kInvalidArgument, "FPN width must lie in [1, 4 * max stage width]");
  }
  check_input_dims(input_height, input_width);
}

const TensorD& DetectorParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(ErrorCode::kCheckpointMismatch, "missing tensor " + name);
  return it->second;
}

TensorD& DetectorParams::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw Error(ErrorCode::kCheckpointMismatch, "missing tensor " + name);
  return it->second;
}

std::map<std::string, Shape> expected_shapes(const DetectorConfig& cfg) {
  std::map<std::string, Shape> out;
  std::size_t in = 1;
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t w = cfg.widths[k];
    out[stage(k) + ".conv.weight"] = {w, in, 3, 3};
    add_bn(out, stage(k), w);
    out[lateral(k) + ".weight"] = {cfg.fpn_width, w, 1, 1};
    out[lateral(k) + ".bias"] = {cfg.fpn_width};
    in = w;
  }
  out["head.conv.weight"] = {1, cfg.fpn_width, 1, 1};
  add_bn(out, "head", 1);
  return out;
}

std::vector<std::string> trainable_names(const DetectorConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& [name, shape] : expected_shapes(cfg)) {
    if (!is_running_stat(name)) names.push_back(name);
  }
  return names;
}

DetectorParams build_detector(const DetectorConfig& cfg, Rng& rng) {
  cfg.validate();
  DetectorParams p{cfg, {}};
  for (const auto& [name, shape] : expected_shapes(cfg)) {
    TensorD t(shape, 0.0);
    if (name.ends_with("weight")) {
      const double fan_in = static_cast<double>(shape[1] * shape[2] * shape[3]);
      const double sd = std::sqrt(2.0 / fan_in);
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, sd);
    } else if (name.ends_with(".gamma") || name.ends_with(".running_var")) {
      t.fill(1.0);
    }
    p.tensors.emplace(name, std::move(t));
  }
  return p;
}

void round_to_float(DetectorParams& params) {
  for (auto& [name, t] : params.tensors) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(static_cast<float>(t[i]));
  }
}

void check_input_dims(std::size_t height, std::size_t width) {
  if (height < 16 || width < 16 || height % 8 != 0 || width % 8 != 0) {
    throw Error(ErrorCode::kShapeMismatch, "detector input " + std::to_string(height) + "x" +
                                               std::to_string(width) +
                                               " must have sides that are multiples of 8, >= 16");
  }
}

DetectorGraph::DetectorGraph(diff::Tape& tape, DetectorParams& params)
    : tape_(tape), params_(params), names_(trainable_names(params.config)) {
  const auto shapes = expected_shapes(params.config);
  for (const auto& [name, shape] : shapes) {
    if (params.at(name).shape() != shape) {
      throw Error(ErrorCode::kCheckpointMismatch,
                  name + " has shape " + shape_to_string(params.at(name).shape()) + ", expected " +
                      shape_to_string(shape));
    }
  }
  for (const std::string& n : names_) vars_.emplace(n, tape_.leaf(params_.at(n)));
}

diff::Var DetectorGraph::conv_bn(diff::Var x, const std::string& prefix, int stride, int pad,
                                 bool train, bool relu_after) {
  diff::Var y = diff::conv2d(tape_, x, vars_.at(prefix + ".conv.weight"), std::nullopt, stride, pad);
  TensorD& rm = params_.at(prefix + ".bn.running_mean");
  TensorD& rv = params_.at(prefix + ".bn.running_var");
  diff::BatchNormState st(rm.size());
  st.running_mean = rm;
  st.running_var = rv;
  y = diff::batch_norm(tape_, y, vars_.at(prefix + ".bn.gamma"), vars_.at(prefix + ".bn.beta"), st,
                       train);
  if (train) {
    rm = st.running_mean;
    rv = st.running_var;
  }
  return relu_after ? diff::relu(tape_, y) : y;
}

diff::Var DetectorGraph::forward(diff::Var input, bool train) {
  const diff::Array& x = tape_.value(input);
  if (x.rank() != 4 || x.dim(1) != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "detector expects [N, 1, H, W], got " + shape_to_string(x.shape()));
  }
  const std::size_t h = x.dim(2), w = x.dim(3);
  check_input_dims(h, w);

  std::array<diff::Var, 4> taps;
  diff::Var cur = input;
  for (std::size_t k = 0; k < 4; ++k) {
    cur = conv_bn(cur, stage(k), 2, 1, train, true);
    taps[k] = cur;
  }
  auto lat = [&](std::size_t k) {
    return diff::conv1x1(tape_, taps[k], vars_.at(lateral(k) + ".weight"),
                         vars_.at(lateral(k) + ".bias"));
  };
  diff::Var fused = lat(3);
  for (std::size_t k = 3; k-- > 0;) {
    const diff::Array& t = tape_.value(taps[k]);
    fused = diff::add(tape_, diff::bicubic_resize(tape_, fused, t.dim(2), t.dim(3), diff::ResizeGrid::kConvGrid), lat(k));
  }
  const diff::Var head = conv_bn(fused, "head", 1, 0, train, false);
  return diff::bicubic_resize(tape_, head, h, w, diff::ResizeGrid::kConvGrid);
}

std::vector<const diff::Array*> DetectorGraph::grads() const {
  std::vector<const diff::Array*> out;
  for (const std::string& n : names_) out.push_back(&tape_.grad(vars_.at(n)));
  return out;
}

std::vector<diff::Array*> DetectorGraph::param_ptrs() {
  std::vector<diff::Array*> out;
  for (const std::string& n : names_) out.push_back(&params_.at(n));
  return out;
}

diff::Array images_to_batch(std::span<const ImageGray> images) {
  if (images.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image batch");
  const std::size_t h = images[0].height(), w = images[0].width();
  diff::Array out({images.size(), 1, h, w});
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height() != h || images[i].width() != w) {
      throw Error(ErrorCode::kShapeMismatch, "images in a batch must share one size");
    }
    const auto px = images[i].pixels().data();
    std::copy(px.begin(), px.end(), out.ptr() + i * h * w);
  }
  return out;
}

Heatmap detector_forward(const DetectorParams& params, const ImageGray& img) {
  check_input_dims(img.height(), img.width());
  DetectorParams local = params;  // eval mode never writes, the graph just needs a mutable ref
  diff::Tape tape;
  DetectorGraph graph(tape, local);
  const diff::Var x = tape.constant(images_to_batch(std::span<const ImageGray>(&img, 1)));
  const diff::Var y = graph.forward(x, false);
  const diff::Array& v = tape.value(y);
  Tensor logits({img.height(), img.width()});
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = static_cast<float>(v[i]);
  return Heatmap(std::move(logits));
}

}  // namespace fpc
