#include "fpc/diff/adam.hpp"

#include <cmath>

#include "fpc/core/error.hpp"

namespace fpc::diff {

void adam_step(const std::vector<Array*>& params, const std::vector<const Array*>& grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam_step: params and grads differ in count");
  }
  if (state.m.empty() && state.step == 0) {
    for (const Array* p : params) {
      state.m.emplace_back(p->shape(), 0.0);
      state.v.emplace_back(p->shape(), 0.0);
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "adam_step: state does not match parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape() || state.m[i].shape() != params[i]->shape() ||
        state.v[i].shape() != params[i]->shape()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "adam_step: shape mismatch at parameter " + std::to_string(i));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Array& p = *params[i];
    const Array& g = *grads[i];
    Array& m = state.m[i];
    Array& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      p[j] -= cfg.lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg.eps);
    }
  }
}

}  // namespace fpc::diff
