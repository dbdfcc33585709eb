#pragma once

#include <vector>

#include "fpc/diff/tape.hpp"

namespace fpc::diff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Array> m;
  std::vector<Array> v;
  long step = 0;
};

// Bias-corrected Adam. State moments are created on the first call and must
// keep matching the parameter shapes afterwards.
void adam_step(const std::vector<Array*>& params, const std::vector<const Array*>& grads,
               AdamState& state, const AdamConfig& cfg);

}  // namespace fpc::diff
