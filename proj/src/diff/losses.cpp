#include "fpc/diff/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "fpc/core/error.hpp"

namespace fpc::diff {
namespace {

double stable_sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void check_target(const Array& x, const Array& target, Valid valid, const char* what) {
  if (x.shape() != target.shape()) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": prediction " +
                                               shape_to_string(x.shape()) + " vs target " +
                                               shape_to_string(target.shape()));
  }
  if (!valid.empty() && valid.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, std::string(what) + ": validity mask size mismatch");
  }
}

bool is_valid(Valid valid, std::size_t i) { return valid.empty() || valid[i] != 0; }

std::size_t count_valid(Valid valid, std::size_t n) {
  if (valid.empty()) return n;
  return static_cast<std::size_t>(std::count_if(valid.begin(), valid.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

// Samplers for h[i] (original -> warped frame) and h[i]^-1, one per sample.
struct WarpPair {
  std::vector<WarpSampler> forward;
  std::vector<WarpSampler> backward;
  std::vector<std::uint8_t> valid_fwd;  // warped frame
  std::vector<std::uint8_t> valid_bwd;  // original frame
};

WarpPair build_warps(const Tape& tape, const ConsistencyInputs& in) {
  const Array& p = tape.value(in.p);
  if (p.rank() != 4 || p.dim(1) != 1) {
    throw Error(ErrorCode::kShapeMismatch, "consistency loss expects [N, 1, H, W] logits");
  }
  if (tape.value(in.p_prime).shape() != p.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "consistency loss: p and p' differ in shape");
  }
  if (in.m == nullptr || in.m_prime == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "consistency loss needs both target masks");
  }
  check_target(p, *in.m, in.valid, "consistency loss");
  check_target(p, *in.m_prime, in.valid_prime, "consistency loss");
  const std::size_t n = p.dim(0), h = p.dim(2), w = p.dim(3), hw = h * w;
  if (in.h.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "consistency loss needs one homography per sample");
  }
  WarpPair out;
  out.valid_fwd.resize(n * hw);
  out.valid_bwd.resize(n * hw);
  for (std::size_t i = 0; i < n; ++i) {
    out.forward.emplace_back(in.h[i], h, w, h, w, Interp::kBilinear);
    out.backward.emplace_back(hom_invert(in.h[i]), h, w, h, w, Interp::kBilinear);
    const auto vf = out.forward.back().validity().bits();
    const auto vb = out.backward.back().validity().bits();
    for (std::size_t j = 0; j < hw; ++j) {
      const std::size_t k = i * hw + j;
      out.valid_fwd[k] = vf[j] && is_valid(in.valid_prime, k) ? 1 : 0;
      out.valid_bwd[k] = vb[j] && is_valid(in.valid, k) ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double huber(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

Var focal_loss(Tape& tape, Var lv, const Array& target, Valid valid, FocalParams fp) {
  const Array& z = tape.value(lv);
  check_target(z, target, valid, "focal_loss");
  if (!(fp.alpha > 0.0 && fp.alpha < 1.0) || !(fp.gamma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal_loss needs alpha in (0, 1) and gamma >= 0");
  }
  const std::size_t nv = count_valid(valid, z.size());
  if (nv == 0) throw Error(ErrorCode::kInsufficientData, "focal_loss: no valid pixels");

  const double a = fp.alpha, g = fp.gamma;
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!is_valid(valid, i)) continue;
    const double s = stable_sigmoid(z[i]), sn = stable_sigmoid(-z[i]);
    const double y = target[i];
    const double pos = a * std::pow(sn, g) * softplus(-z[i]);
    const double neg = (1.0 - a) * std::pow(s, g) * softplus(z[i]);
    total += y * pos + (1.0 - y) * neg;
  }
  Array out({1}, total / static_cast<double>(nv));
  auto tgt = std::make_shared<const Array>(target);
  std::vector<std::uint8_t> vmask(valid.begin(), valid.end());
  return tape.record(std::move(out), {lv},
                     [lv, tgt, vmask = std::move(vmask), a, g, nv](Tape& t, std::size_t self) {
                       const double go = t.grad(Var{self})[0] / static_cast<double>(nv);
                       const Array& z = t.value(lv);
                       Array& gz = t.grad_mut(lv.id);
                       for (std::size_t i = 0; i < z.size(); ++i) {
                         if (!is_valid(vmask, i)) continue;
                         const double s = stable_sigmoid(z[i]), sn = stable_sigmoid(-z[i]);
                         const double y = (*tgt)[i];
                         const double dpos =
                             a * std::pow(sn, g) * (-g * s * softplus(-z[i]) - sn);
                         const double dneg =
                             (1.0 - a) * std::pow(s, g) * (g * sn * softplus(z[i]) + s);
                         gz[i] += go * (y * dpos + (1.0 - y) * dneg);
                       }
                     });
}

Var huber_loss(Tape& tape, Var pv, const Array& target, Valid valid, double delta) {
  const Array& x = tape.value(pv);
  check_target(x, target, valid, "huber_loss");
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidArgument, "huber delta must be > 0");
  const std::size_t nv = count_valid(valid, x.size());
  if (nv == 0) throw Error(ErrorCode::kInsufficientData, "huber_loss: no valid pixels");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_valid(valid, i)) total += huber(x[i] - target[i], delta);
  }
  Array out({1}, total / static_cast<double>(nv));
  auto tgt = std::make_shared<const Array>(target);
  std::vector<std::uint8_t> vmask(valid.begin(), valid.end());
  return tape.record(std::move(out), {pv},
                     [pv, tgt, vmask = std::move(vmask), delta, nv](Tape& t, std::size_t self) {
                       const double go = t.grad(Var{self})[0] / static_cast<double>(nv);
                       const Array& x = t.value(pv);
                       Array& gx = t.grad_mut(pv.id);
                       for (std::size_t i = 0; i < x.size(); ++i) {
                         if (!is_valid(vmask, i)) continue;
                         const double r = x[i] - (*tgt)[i];
                         gx[i] += go * std::clamp(r, -delta, delta);
                       }
                     });
}

Array masked_log_softmax(const Array& x, Valid valid) {
  if (x.rank() < 2) throw Error(ErrorCode::kShapeMismatch, "masked_softmax needs a batch axis");
  if (!valid.empty() && valid.size() != x.size()) {
    throw Error(ErrorCode::kShapeMismatch, "masked_softmax: validity mask size mismatch");
  }
  const std::size_t n = x.dim(0), per = x.size() / n;
  Array out(x.shape(), 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t base = s * per;
    double mx = -std::numeric_limits<double>::infinity();
    std::size_t cnt = 0;
    for (std::size_t i = base; i < base + per; ++i) {
      if (!is_valid(valid, i)) continue;
      mx = std::max(mx, x[i]);
      ++cnt;
    }
    if (cnt < 2) {
      throw Error(ErrorCode::kInsufficientData,
                  "softmax: sample " + std::to_string(s) + " has < 2 valid pixels");
    }
    double sum = 0.0;
    for (std::size_t i = base; i < base + per; ++i) {
      if (is_valid(valid, i)) sum += std::exp(x[i] - mx);
    }
    const double lse = mx + std::log(sum);
    for (std::size_t i = base; i < base + per; ++i) {
      if (is_valid(valid, i)) out[i] = x[i] - lse;
    }
  }
  return out;
}

Array masked_softmax(const Array& x, Valid valid) {
  Array out = masked_log_softmax(x, valid);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = is_valid(valid, i) ? std::exp(out[i]) : 0.0;
  return out;
}

Var kl_softmax_loss(Tape& tape, Var lv, const Array& target, Valid valid) {
  const Array& z = tape.value(lv);
  check_target(z, target, valid, "kl_softmax_loss");
  if (z.rank() < 2) throw Error(ErrorCode::kShapeMismatch, "kl_softmax_loss needs a batch axis");
  const std::size_t n = z.dim(0);

  const Array log_q = masked_log_softmax(z, valid);
  const Array log_r = masked_log_softmax(target, valid);
  auto q = std::make_shared<Array>(z.shape(), 0.0);
  auto r = std::make_shared<Array>(z.shape(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!is_valid(valid, i)) continue;
    (*q)[i] = std::exp(log_q[i]);
    (*r)[i] = std::exp(log_r[i]);
    total += (*r)[i] * (log_r[i] - log_q[i]);
  }
  Array out({1}, total / static_cast<double>(n));
  return tape.record(std::move(out), {lv}, [lv, q, r, n](Tape& t, std::size_t self) {
    const double go = t.grad(Var{self})[0] / static_cast<double>(n);
    Array& gz = t.grad_mut(lv.id);
    for (std::size_t i = 0; i < q->size(); ++i) gz[i] += go * ((*q)[i] - (*r)[i]);
  });
}

Var consistency_loss_regression(Tape& tape, const ConsistencyInputs& in, double delta) {
  const WarpPair wp = build_warps(tape, in);
  const Var pw = sigmoid(tape, warp(tape, in.p, wp.forward));
  const Var ppw = sigmoid(tape, warp(tape, in.p_prime, wp.backward));
  const Var a = huber_loss(tape, pw, *in.m_prime, wp.valid_fwd, delta);
  const Var b = huber_loss(tape, ppw, *in.m, wp.valid_bwd, delta);
  return add(tape, a, b);
}

Var consistency_loss_classification(Tape& tape, const ConsistencyInputs& in) {
  const WarpPair wp = build_warps(tape, in);
  const Var pw = warp(tape, in.p, wp.forward);
  const Var ppw = warp(tape, in.p_prime, wp.backward);
  const Var a = kl_softmax_loss(tape, pw, *in.m_prime, wp.valid_fwd);
  const Var b = kl_softmax_loss(tape, ppw, *in.m, wp.valid_bwd);
  return add(tape, a, b);
}

}  // namespace fpc::diff
