#include "fpc/diff/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>

#include "fpc/core/error.hpp"

namespace fpc::diff {
namespace {

void require_rank4(const Array& a, const char* what) {
  if (a.rank() != 4) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(what) + " expects [N, C, H, W], got " + shape_to_string(a.shape()));
  }
}

// Output index range [lo, hi) for which in = out * stride + offset lies in [0, n).
std::pair<long, long> valid_range(long out_n, long stride, long offset, long n) {
  long lo = 0;
  if (offset < 0) lo = (-offset + stride - 1) / stride;
  long hi = out_n;
  if ((out_n - 1) * stride + offset >= n) hi = (n - 1 - offset) / stride + 1;
  if (n - 1 - offset < 0) hi = 0;
  return {lo, std::max(lo, hi)};
}

struct Taps1D {
  std::vector<std::array<std::uint32_t, 4>> index;
  std::vector<std::array<double, 4>> weight;
};

Taps1D cubic_taps(std::size_t in_n, std::size_t out_n, ResizeGrid grid) {
  Taps1D t;
  t.index.resize(out_n);
  t.weight.resize(out_n);
  const double scale = static_cast<double>(in_n) / static_cast<double>(out_n);
  const long last = static_cast<long>(in_n) - 1;
  for (std::size_t o = 0; o < out_n; ++o) {
    // conv grid: a stride-2, pad-1 conv puts feature j over input pixel 2j
    const double src = grid == ResizeGrid::kHalfPixel
                           ? (static_cast<double>(o) + 0.5) * scale - 0.5
                           : 0.5 * static_cast<double>(o);
    const long x0 = static_cast<long>(std::floor(src));
    const double f = src - static_cast<double>(x0);
    for (int k = 0; k < 4; ++k) {
      t.index[o][k] = static_cast<std::uint32_t>(std::clamp(x0 - 1 + k, 0L, last));
      t.weight[o][k] = keys_cubic(f - (k - 1));
    }
  }
  return t;
}

}  // namespace

Var conv2d(Tape& tape, Var xv, Var wv, std::optional<Var> bv, int stride, int pad) {
  const Array& x = tape.value(xv);
  const Array& w = tape.value(wv);
  require_rank4(x, "conv2d input");
  require_rank4(w, "conv2d weight");
  const long n = static_cast<long>(x.dim(0)), c = static_cast<long>(x.dim(1));
  const long h = static_cast<long>(x.dim(2)), wd = static_cast<long>(x.dim(3));
  const long o = static_cast<long>(w.dim(0)), k = static_cast<long>(w.dim(2));
  if (static_cast<long>(w.dim(1)) != c || static_cast<long>(w.dim(3)) != k) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d weight " + shape_to_string(w.shape()) +
                                               " does not fit input " + shape_to_string(x.shape()));
  }
  if (stride < 1 || pad < 0) throw Error(ErrorCode::kInvalidArgument, "conv2d stride/pad");
  if (bv && (tape.value(*bv).rank() != 1 || static_cast<long>(tape.value(*bv).dim(0)) != o)) {
    throw Error(ErrorCode::kShapeMismatch, "conv2d bias must be [O]");
  }
  const long ho = (h + 2 * pad - k) / stride + 1;
  const long wo = (wd + 2 * pad - k) / stride + 1;
  if (ho < 1 || wo < 1) throw Error(ErrorCode::kShapeMismatch, "conv2d output would be empty");

  Array out({static_cast<std::size_t>(n), static_cast<std::size_t>(o),
             static_cast<std::size_t>(ho), static_cast<std::size_t>(wo)});
  const double* xp = x.ptr();
  const double* wp = w.ptr();
  double* op = out.ptr();
  for (long ni = 0; ni < n; ++ni) {
    for (long oi = 0; oi < o; ++oi) {
      double* plane = op + (ni * o + oi) * ho * wo;
      const double b = bv ? tape.value(*bv)[static_cast<std::size_t>(oi)] : 0.0;
      std::fill(plane, plane + ho * wo, b);
      for (long ci = 0; ci < c; ++ci) {
        const double* in = xp + (ni * c + ci) * h * wd;
        for (long ky = 0; ky < k; ++ky) {
          const auto [ylo, yhi] = valid_range(ho, stride, ky - pad, h);
          for (long kx = 0; kx < k; ++kx) {
            const double wt = wp[((oi * c + ci) * k + ky) * k + kx];
            const auto [xlo, xhi] = valid_range(wo, stride, kx - pad, wd);
            for (long oy = ylo; oy < yhi; ++oy) {
              const double* row = in + (oy * stride + ky - pad) * wd + (kx - pad);
              double* orow = plane + oy * wo;
              for (long ox = xlo; ox < xhi; ++ox) orow[ox] += wt * row[ox * stride];
            }
          }
        }
      }
    }
  }

  std::optional<std::size_t> bid;
  if (bv) bid = bv->id;
  auto backward = [xv, wv, bid, n, c, h, wd, o, k, ho, wo, stride, pad](Tape& t, std::size_t self) {
    const double* g = t.grad(Var{self}).ptr();
    const double* xp = t.value(xv).ptr();
    const double* wp = t.value(wv).ptr();
    const bool gx_on = t.requires_grad(xv), gw_on = t.requires_grad(wv);
    double* gx = t.grad_mut(xv.id).ptr();
    double* gw = t.grad_mut(wv.id).ptr();
    if (bid && t.requires_grad(Var{*bid})) {
      double* gb = t.grad_mut(*bid).ptr();
      for (long ni = 0; ni < n; ++ni) {
        for (long oi = 0; oi < o; ++oi) {
          const double* plane = g + (ni * o + oi) * ho * wo;
          double s = 0.0;
          for (long i = 0; i < ho * wo; ++i) s += plane[i];
          gb[oi] += s;
        }
      }
    }
    for (long ni = 0; ni < n; ++ni) {
      for (long oi = 0; oi < o; ++oi) {
        const double* plane = g + (ni * o + oi) * ho * wo;
        for (long ci = 0; ci < c; ++ci) {
          const double* in = xp + (ni * c + ci) * h * wd;
          double* gin = gx + (ni * c + ci) * h * wd;
          for (long ky = 0; ky < k; ++ky) {
            const auto [ylo, yhi] = valid_range(ho, stride, ky - pad, h);
            for (long kx = 0; kx < k; ++kx) {
              const long widx = ((oi * c + ci) * k + ky) * k + kx;
              const double wt = wp[widx];
              const auto [xlo, xhi] = valid_range(wo, stride, kx - pad, wd);
              double acc = 0.0;
              for (long oy = ylo; oy < yhi; ++oy) {
                const long base = (oy * stride + ky - pad) * wd + (kx - pad);
                const double* grow = plane + oy * wo;
                if (gw_on) {
                  const double* row = in + base;
                  for (long ox = xlo; ox < xhi; ++ox) acc += grow[ox] * row[ox * stride];
                }
                if (gx_on) {
                  double* grow_in = gin + base;
                  for (long ox = xlo; ox < xhi; ++ox) grow_in[ox * stride] += wt * grow[ox];
                }
              }
              if (gw_on) gw[widx] += acc;
            }
          }
        }
      }
    }
  };
  if (bv) return tape.record(std::move(out), {xv, wv, *bv}, backward);
  return tape.record(std::move(out), {xv, wv}, backward);
}

Var relu(Tape& tape, Var xv) {
  const Array& x = tape.value(xv);
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return tape.record(std::move(out), {xv}, [xv](Tape& t, std::size_t self) {
    const Array& x = t.value(xv);
    const Array& g = t.grad(Var{self});
    Array& gx = t.grad_mut(xv.id);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var sigmoid(Tape& tape, Var xv) {
  const Array& x = tape.value(xv);
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = x[i];
    out[i] = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  return tape.record(std::move(out), {xv}, [xv](Tape& t, std::size_t self) {
    const Array& s = t.value(Var{self});
    const Array& g = t.grad(Var{self});
    Array& gx = t.grad_mut(xv.id);
    for (std::size_t i = 0; i < s.size(); ++i) gx[i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Var add(Tape& tape, Var av, Var bv) {
  const Array& a = tape.value(av);
  const Array& b = tape.value(bv);
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "add: " + shape_to_string(a.shape()) + " vs " +
                                               shape_to_string(b.shape()));
  }
  Array out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return tape.record(std::move(out), {av, bv}, [av, bv](Tape& t, std::size_t self) {
    const Array& g = t.grad(Var{self});
    for (Var v : {av, bv}) {
      if (!t.requires_grad(v)) continue;
      Array& gv = t.grad_mut(v.id);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var scale(Tape& tape, Var xv, double c) {
  const Array& x = tape.value(xv);
  Array out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
  return tape.record(std::move(out), {xv}, [xv, c](Tape& t, std::size_t self) {
    const Array& g = t.grad(Var{self});
    Array& gx = t.grad_mut(xv.id);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
  });
}

Var slice_batch(Tape& tape, Var xv, std::size_t begin, std::size_t count) {
  const Array& x = tape.value(xv);
  if (count == 0 || begin + count > x.dim(0)) {
    throw Error(ErrorCode::kShapeMismatch, "slice_batch range outside " + shape_to_string(x.shape()));
  }
  Shape shape = x.shape();
  shape[0] = count;
  const std::size_t per = x.size() / x.dim(0);
  Array out(shape);
  std::copy(x.ptr() + begin * per, x.ptr() + (begin + count) * per, out.ptr());
  return tape.record(std::move(out), {xv}, [xv, begin, per](Tape& t, std::size_t self) {
    const Array& g = t.grad(Var{self});
    double* gx = t.grad_mut(xv.id).ptr() + begin * per;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var batch_norm(Tape& tape, Var xv, Var gv, Var bv, BatchNormState& state, bool train,
               double momentum, double eps) {
  const Array& x = tape.value(xv);
  require_rank4(x, "batch_norm input");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const Array& gamma = tape.value(gv);
  const Array& beta = tape.value(bv);
  if (gamma.size() != c || beta.size() != c || state.running_mean.size() != c ||
      state.running_var.size() != c) {
    throw Error(ErrorCode::kShapeMismatch, "batch_norm parameters do not match channels");
  }
  if (train && n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "batch_norm in train mode needs a batch of >= 2");
  }
  const double count = static_cast<double>(n * hw);
  std::vector<double> mean(c), inv_std(c);
  for (std::size_t ci = 0; ci < c; ++ci) {
    if (train) {
      double s = 0.0;
      for (std::size_t ni = 0; ni < n; ++ni) {
        const double* p = x.ptr() + (ni * c + ci) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / count;
      double ss = 0.0;
      for (std::size_t ni = 0; ni < n; ++ni) {
        const double* p = x.ptr() + (ni * c + ci) * hw;
        for (std::size_t i = 0; i < hw; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / count;
      mean[ci] = mu;
      inv_std[ci] = 1.0 / std::sqrt(var + eps);
      state.running_mean[ci] = momentum * state.running_mean[ci] + (1.0 - momentum) * mu;
      state.running_var[ci] =
          momentum * state.running_var[ci] + (1.0 - momentum) * ss / (count - 1.0);
    } else {
      mean[ci] = state.running_mean[ci];
      inv_std[ci] = 1.0 / std::sqrt(state.running_var[ci] + eps);
    }
  }
  Array out(x.shape());
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      const double* p = x.ptr() + (ni * c + ci) * hw;
      double* q = out.ptr() + (ni * c + ci) * hw;
      const double a = gamma[ci] * inv_std[ci];
      const double b = beta[ci] - a * mean[ci];
      for (std::size_t i = 0; i < hw; ++i) q[i] = a * p[i] + b;
    }
  }
  return tape.record(
      std::move(out), {xv, gv, bv},
      [xv, gv, bv, n, c, hw, mean, inv_std, train, count](Tape& t, std::size_t self) {
        const double* g = t.grad(Var{self}).ptr();
        const double* x = t.value(xv).ptr();
        const Array& gamma = t.value(gv);
        for (std::size_t ci = 0; ci < c; ++ci) {
          double sum_g = 0.0, sum_gxhat = 0.0;
          for (std::size_t ni = 0; ni < n; ++ni) {
            const double* gp = g + (ni * c + ci) * hw;
            const double* xp = x + (ni * c + ci) * hw;
            for (std::size_t i = 0; i < hw; ++i) {
              sum_g += gp[i];
              sum_gxhat += gp[i] * (xp[i] - mean[ci]) * inv_std[ci];
            }
          }
          if (t.requires_grad(gv)) t.grad_mut(gv.id)[ci] += sum_gxhat;
          if (t.requires_grad(bv)) t.grad_mut(bv.id)[ci] += sum_g;
          if (!t.requires_grad(xv)) continue;
          double* gx = t.grad_mut(xv.id).ptr();
          const double a = gamma[ci] * inv_std[ci];
          for (std::size_t ni = 0; ni < n; ++ni) {
            const double* gp = g + (ni * c + ci) * hw;
            const double* xp = x + (ni * c + ci) * hw;
            double* gxp = gx + (ni * c + ci) * hw;
            if (train) {
              for (std::size_t i = 0; i < hw; ++i) {
                const double xhat = (xp[i] - mean[ci]) * inv_std[ci];
                gxp[i] += a * (gp[i] - sum_g / count - xhat * sum_gxhat / count);
              }
            } else {
              for (std::size_t i = 0; i < hw; ++i) gxp[i] += a * gp[i];
            }
          }
        }
      });
}

Var bicubic_resize(Tape& tape, Var xv, std::size_t out_h, std::size_t out_w, ResizeGrid grid) {
  const Array& x = tape.value(xv);
  require_rank4(x, "bicubic_resize input");
  const std::size_t planes = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (out_h == 0 || out_w == 0) throw Error(ErrorCode::kShapeMismatch, "resize to empty size");
  const Taps1D rows = cubic_taps(h, out_h, grid);
  const Taps1D cols = cubic_taps(w, out_w, grid);

  Array out({x.dim(0), x.dim(1), out_h, out_w});
  std::vector<double> tmp(h * out_w);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* in = x.ptr() + p * h * w;
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t oc = 0; oc < out_w; ++oc) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += cols.weight[oc][k] * in[r * w + cols.index[oc][k]];
        tmp[r * out_w + oc] = acc;
      }
    }
    double* o = out.ptr() + p * out_h * out_w;
    for (std::size_t orow = 0; orow < out_h; ++orow) {
      double* dst = o + orow * out_w;
      std::fill(dst, dst + out_w, 0.0);
      for (int k = 0; k < 4; ++k) {
        const double wt = rows.weight[orow][k];
        const double* src = tmp.data() + rows.index[orow][k] * out_w;
        for (std::size_t oc = 0; oc < out_w; ++oc) dst[oc] += wt * src[oc];
      }
    }
  }
  return tape.record(std::move(out), {xv},
                     [xv, rows, cols, planes, h, w, out_h, out_w](Tape& t, std::size_t self) {
                       const double* g = t.grad(Var{self}).ptr();
                       double* gx = t.grad_mut(xv.id).ptr();
                       std::vector<double> tmp(h * out_w);
                       for (std::size_t p = 0; p < planes; ++p) {
                         std::fill(tmp.begin(), tmp.end(), 0.0);
                         const double* gp = g + p * out_h * out_w;
                         for (std::size_t orow = 0; orow < out_h; ++orow) {
                           for (int k = 0; k < 4; ++k) {
                             const double wt = rows.weight[orow][k];
                             double* dst = tmp.data() + rows.index[orow][k] * out_w;
                             for (std::size_t oc = 0; oc < out_w; ++oc) {
                               dst[oc] += wt * gp[orow * out_w + oc];
                             }
                           }
                         }
                         double* gin = gx + p * h * w;
                         for (std::size_t r = 0; r < h; ++r) {
                           for (std::size_t oc = 0; oc < out_w; ++oc) {
                             const double v = tmp[r * out_w + oc];
                             for (int k = 0; k < 4; ++k) {
                               gin[r * w + cols.index[oc][k]] += cols.weight[oc][k] * v;
                             }
                           }
                         }
                       }
                     });
}

Var warp(Tape& tape, Var xv, std::span<const WarpSampler> samplers) {
  const Array& x = tape.value(xv);
  require_rank4(x, "warp input");
  const std::size_t n = x.dim(0), hw = x.dim(2) * x.dim(3);
  if (x.dim(1) != 1 || samplers.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "warp expects [N, 1, H, W] and N samplers");
  }
  for (const WarpSampler& s : samplers) {
    if (s.in_size() != hw || s.out_size() != hw) {
      throw Error(ErrorCode::kShapeMismatch, "warp sampler size does not match input");
    }
  }
  Array out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    samplers[i].apply<double>(x.data().subspan(i * hw, hw), out.data().subspan(i * hw, hw));
  }
  // The backward pass may run after the caller's samplers are gone.
  auto owned = std::make_shared<const std::vector<WarpSampler>>(samplers.begin(), samplers.end());
  return tape.record(std::move(out), {xv}, [xv, owned, n, hw](Tape& t, std::size_t self) {
    const Array& g = t.grad(Var{self});
    Array& gx = t.grad_mut(xv.id);
    for (std::size_t i = 0; i < n; ++i) {
      (*owned)[i].apply_transpose<double>(g.data().subspan(i * hw, hw),
                                          gx.data().subspan(i * hw, hw));
    }
  });
}

}  // namespace fpc::diff
