#include "fpc/detector/train.hpp"

#include <cmath>
#include <sstream>

#include "fpc/core/error.hpp"
#include "fpc/core/io.hpp"
#include "fpc/geometry/warp.hpp"

namespace fpc {
namespace {

constexpr std::uint64_t kShuffleStream = 1000;
constexpr std::uint64_t kWarpStream = 2000;

void copy_into(diff::Array& dst, std::size_t slot, const Tensor& src) {
  const auto d = src.data();
  std::copy(d.begin(), d.end(), dst.ptr() + slot * src.size());
}

void check_finite(double loss, std::size_t stage, std::size_t epoch, std::size_t batch) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::kDivergence, "non-finite loss in stage " + std::to_string(stage) +
                                            ", epoch " + std::to_string(epoch) + ", batch " +
                                            std::to_string(batch));
  }
}

TargetMask consistency_mask(const TargetMask& binary, const TrainConfig& cfg) {
  switch (cfg.consistency_target) {
    case ConsistencyTarget::kStage2:
      return stage2_target(binary, cfg);
    case ConsistencyTarget::kGaussian:
      return gaussian_filter(binary, cfg.gaussian_sigma);
    case ConsistencyTarget::kBinary:
      return binary;
  }
  return binary;
}

void check_dataset(const std::vector<TrainSample>& data, const DetectorParams& params) {
  if (data.empty()) throw Error(ErrorCode::kInsufficientData, "training set is empty");
  for (const TrainSample& s : data) {
    check_input_dims(s.image.height(), s.image.width());
    if (s.mask.height() != s.image.height() || s.mask.width() != s.image.width()) {
      throw Error(ErrorCode::kShapeMismatch, "teacher mask size differs from its image");
    }
    if (s.image.height() != data[0].image.height() || s.image.width() != data[0].image.width()) {
      throw Error(ErrorCode::kShapeMismatch, "training images must share one size");
    }
  }
  (void)params;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch < 2) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 2");
  if (epochs1 == 0 || epochs2 == 0) throw Error(ErrorCode::kInvalidArgument, "epochs must be > 0");
  photometric.validate();
  if (!(lambda_c >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "lambda_c must be >= 0");
  if (!(huber_delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "huber delta must be > 0");
  if (!(gaussian_sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be > 0");
  if (!(label_smoothing >= 0.0 && label_smoothing < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "label smoothing must lie in [0, 0.5)");
  }
  if (!(adam.lr > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid Adam settings");
  }
  if (!(focal.alpha > 0.0 && focal.alpha < 1.0) || !(focal.gamma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal alpha must lie in (0, 1), gamma >= 0");
  }
  warp.validate();
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_index(i)]);
  }
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch) {
    out.emplace_back(order.begin() + static_cast<long>(i),
                     order.begin() + static_cast<long>(std::min(n, i + batch)));
  }
  if (out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back()[0]);
    out.pop_back();
  }
  return out;
}

TargetMask warp_mask_points(const TargetMask& mask, const Homography& h) {
  const std::size_t rows = mask.height(), cols = mask.width();
  Tensor out({rows, cols}, 0.0f);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask.values.at(r, c) < 0.5f) continue;
      Eigen::Vector2d q;
      try {
        q = hom_apply(h, Eigen::Vector2d(static_cast<double>(c), static_cast<double>(r)));
      } catch (const Error&) {
        continue;
      }
      const long qc = std::lround(q.x()), qr = std::lround(q.y());
      if (qr >= 0 && qc >= 0 && qr < static_cast<long>(rows) && qc < static_cast<long>(cols)) {
        out.at(static_cast<std::size_t>(qr), static_cast<std::size_t>(qc)) = 1.0f;
      }
    }
  }
  return TargetMask(std::move(out), MaskKind::kBinary);
}

TargetMask stage2_target(const TargetMask& mask, const TrainConfig& cfg) {
  return label_smooth(gaussian_filter(mask, cfg.gaussian_sigma), cfg.label_smoothing);
}

PairBatch make_pair_batch(const std::vector<TrainSample>& data,
                          const std::vector<std::size_t>& indices, const TrainConfig& cfg,
                          Rng& rng) {
  const std::size_t n = indices.size();
  const std::size_t rows = data.at(indices.at(0)).image.height();
  const std::size_t cols = data[indices[0]].image.width();
  const Shape shape{n, 1, rows, cols};
  PairBatch b{diff::Array(shape), diff::Array(shape), {}, diff::Array(shape),
              diff::Array(shape), diff::Array(shape), diff::Array(shape), {}};
  b.valid_prime.resize(n * rows * cols);
  for (std::size_t i = 0; i < n; ++i) {
    const TrainSample& s = data.at(indices[i]);
    const Homography h = sample_homography(cfg.warp, cols, rows, rng);
    auto [warped, valid] = warp_image(s.image, h, Interp::kBilinear);
    apply_photometric(warped, cfg.photometric, rng);
    const TargetMask mask_prime = warp_mask_points(s.mask, h);
    copy_into(b.images, i, s.image.pixels());
    copy_into(b.warped, i, warped.pixels());
    copy_into(b.target, i, stage2_target(s.mask, cfg).values);
    copy_into(b.target_prime, i, stage2_target(mask_prime, cfg).values);
    copy_into(b.m, i, consistency_mask(s.mask, cfg).values);
    copy_into(b.m_prime, i, consistency_mask(mask_prime, cfg).values);
    const auto bits = valid.bits();
    std::copy(bits.begin(), bits.end(), b.valid_prime.begin() + static_cast<long>(i * rows * cols));
    b.h.push_back(h);
  }
  return b;
}

double stage1_step(DetectorParams& params, diff::AdamState& adam,
                   const std::vector<TrainSample>& data, const std::vector<std::size_t>& indices,
                   const TrainConfig& cfg) {
  std::vector<ImageGray> images;
  for (std::size_t i : indices) images.push_back(data.at(i).image);
  const std::size_t rows = images[0].height(), cols = images[0].width();
  diff::Array target({indices.size(), 1, rows, cols});
  for (std::size_t i = 0; i < indices.size(); ++i) copy_into(target, i, data[indices[i]].mask.values);

  diff::Tape tape;
  DetectorGraph graph(tape, params);
  const diff::Var x = tape.constant(images_to_batch(images));
  const diff::Var y = graph.forward(x, true);
  const diff::Var loss = diff::focal_loss(tape, y, target, {}, cfg.focal);
  const double value = tape.value(loss)[0];
  if (!std::isfinite(value)) return value;
  tape.backward(loss);
  diff::adam_step(graph.param_ptrs(), graph.grads(), adam, cfg.adam);
  return value;
}

double stage2_step(DetectorParams& params, diff::AdamState& adam, const PairBatch& batch,
                   const TrainConfig& cfg) {
  const std::size_t n = batch.images.dim(0);
  Shape shape = batch.images.shape();
  shape[0] = 2 * n;
  diff::Array both(shape);
  std::copy(batch.images.ptr(), batch.images.ptr() + batch.images.size(), both.ptr());
  std::copy(batch.warped.ptr(), batch.warped.ptr() + batch.warped.size(),
            both.ptr() + batch.images.size());

  diff::Tape tape;
  DetectorGraph graph(tape, params);
  // Clean and warped views share one train-mode batch-norm pass.
  const diff::Var y = graph.forward(tape.constant(std::move(both)), true);
  const diff::Var p = diff::slice_batch(tape, y, 0, n);
  const diff::Var pp = diff::slice_batch(tape, y, n, n);

  const diff::Var fa = diff::focal_loss(tape, p, batch.target, {}, cfg.focal);
  const diff::Var fb = diff::focal_loss(tape, pp, batch.target_prime, batch.valid_prime, cfg.focal);
  diff::ConsistencyInputs ci;
  ci.p = p;
  ci.p_prime = pp;
  ci.h = batch.h;
  ci.m = &batch.m;
  ci.m_prime = &batch.m_prime;
  ci.valid_prime = batch.valid_prime;
  const diff::Var lc = cfg.mode == ConsistencyMode::kRegression
                           ? diff::consistency_loss_regression(tape, ci, cfg.huber_delta)
                           : diff::consistency_loss_classification(tape, ci);
  const diff::Var loss =
      diff::add(tape, diff::add(tape, fa, fb), diff::scale(tape, lc, cfg.lambda_c));
  const double value = tape.value(loss)[0];
  if (!std::isfinite(value)) return value;
  tape.backward(loss);
  diff::adam_step(graph.param_ptrs(), graph.grads(), adam, cfg.adam);
  return value;
}

TrainResult train_stage1(const std::vector<TrainSample>& data, DetectorParams params,
                         const TrainConfig& cfg) {
  cfg.validate();
  check_dataset(data, params);
  TrainResult res{std::move(params), {}};
  diff::AdamState adam;
  const Rng root(cfg.seed);
  for (std::size_t e = 0; e < cfg.epochs1; ++e) {
    Rng shuffle = root.child(kShuffleStream + e);
    const auto batches = epoch_batches(data.size(), cfg.batch, shuffle);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const double loss = stage1_step(res.params, adam, data, batches[b], cfg);
      check_finite(loss, 1, e, b);
      res.trace.push_back({1, e, b, loss});
    }
  }
  round_to_float(res.params);
  return res;
}

TrainResult train_stage2(const std::vector<TrainSample>& data, DetectorParams params,
                         const TrainConfig& cfg) {
  cfg.validate();
  check_dataset(data, params);
  TrainResult res{std::move(params), {}};
  diff::AdamState adam;
  const Rng root(cfg.seed);
  for (std::size_t e = 0; e < cfg.epochs2; ++e) {
    Rng shuffle = root.child(kShuffleStream + 500 + e);
    Rng warps = root.child(kWarpStream + e);
    const auto batches = epoch_batches(data.size(), cfg.batch, shuffle);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const PairBatch pb = make_pair_batch(data, batches[b], cfg, warps);
      const double loss = stage2_step(res.params, adam, pb, cfg);
      check_finite(loss, 2, e, b);
      res.trace.push_back({2, e, b, loss});
    }
  }
  round_to_float(res.params);
  return res;
}

double consistency_residual(const DetectorParams& params, const std::vector<TrainSample>& samples,
                            const std::vector<Homography>& hs, const TrainConfig& cfg) {
  if (samples.size() != hs.size() || samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "need one homography per sample");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const TrainSample& s = samples[i];
    const std::size_t rows = s.image.height(), cols = s.image.width();
    const auto [warped, valid] = warp_image(s.image, hs[i], Interp::kBilinear);
    diff::Tape tape;
    auto logits = [&](const ImageGray& img) {
      const Heatmap hm = detector_forward(params, img);
      diff::Array a({1, 1, rows, cols});
      std::copy(hm.logits.data().begin(), hm.logits.data().end(), a.ptr());
      return tape.constant(std::move(a));
    };
    diff::Array m({1, 1, rows, cols}), m_prime({1, 1, rows, cols});
    copy_into(m, 0, consistency_mask(s.mask, cfg).values);
    copy_into(m_prime, 0, consistency_mask(warp_mask_points(s.mask, hs[i]), cfg).values);
    diff::ConsistencyInputs ci;
    ci.p = logits(s.image);
    ci.p_prime = logits(warped);
    ci.h = std::span<const Homography>(&hs[i], 1);
    ci.m = &m;
    ci.m_prime = &m_prime;
    ci.valid_prime = valid.bits();
    const diff::Var lc = cfg.mode == ConsistencyMode::kRegression
                             ? diff::consistency_loss_regression(tape, ci, cfg.huber_delta)
                             : diff::consistency_loss_classification(tape, ci);
    total += tape.value(lc)[0];
  }
  return total / static_cast<double>(samples.size());
}

double warp_disagreement(const DetectorParams& params, const std::vector<ImageGray>& images,
                         const std::vector<Homography>& hs) {
  if (images.size() != hs.size() || images.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "need one homography per image");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageGray& img = images[i];
    const auto [warped, valid_img] = warp_image(img, hs[i], Interp::kBilinear);
    const Heatmap p = detector_forward(params, img);
    const Heatmap pp = detector_forward(params, warped);
    const WarpSampler s(hs[i], img.height(), img.width(), img.height(), img.width());
    std::vector<double> src(p.logits.data().begin(), p.logits.data().end());
    std::vector<double> moved(src.size());
    s.apply<double>(src, moved);
    for (std::size_t j = 0; j < moved.size(); ++j) {
      if (!s.validity()[j] || !valid_img[j]) continue;
      total += std::abs(sigmoid(moved[j]) - sigmoid(pp.logits[j]));
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kUndefinedMetric, "no valid pixels to compare");
  return total / static_cast<double>(count);
}

std::string loss_trace_csv(const std::vector<LossRecord>& trace) {
  std::ostringstream out;
  out << "stage,epoch,batch,loss\n";
  for (const LossRecord& r : trace) {
    out << r.stage << ',' << r.epoch << ',' << r.batch << ',' << format_double(r.loss) << "\n";
  }
  return out.str();
}

}  // namespace fpc
