#include "fpc/diff/tape.hpp"

#include "fpc/core/error.hpp"

namespace fpc::diff {

Var Tape::leaf(Array value, bool requires_grad) {
  Array grad(value.shape(), 0.0);
  nodes_.push_back({std::move(value), std::move(grad), requires_grad, true, nullptr});
  return Var{nodes_.size() - 1};
}

Var Tape::record(Array value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool rg = false;
  for (Var v : inputs) rg = rg || nodes_.at(v.id).requires_grad;
  Array grad(value.shape(), 0.0);
  nodes_.push_back({std::move(value), std::move(grad), rg, false, rg ? std::move(backward) : nullptr});
  return Var{nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (nodes_.at(loss.id).value.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "backward() needs a scalar loss");
  }
  for (Node& n : nodes_) {
    if (!n.is_leaf) n.grad.fill(0.0);
  }
  nodes_[loss.id].grad[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].backward) nodes_[i].backward(*this, i);
  }
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad.fill(0.0);
}

}  // namespace fpc::diff
