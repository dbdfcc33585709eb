#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fpc/core/tensor.hpp"

namespace fpc::diff {

using Array = TensorD;

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Reverse-mode tape. Operations append nodes in evaluation order; backward()
/// walks them in exact reverse order. Leaf gradients accumulate across
/// backward() calls, intermediate gradients are rebuilt on every call.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var leaf(Array value, bool requires_grad = true);
  Var constant(Array value) { return leaf(std::move(value), false); }

  // Records an op result. requires_grad is inherited from the inputs.
  Var record(Array value, std::initializer_list<Var> inputs, BackwardFn backward);

  const Array& value(Var v) const { return nodes_[v.id].value; }
  const Array& grad(Var v) const { return nodes_[v.id].grad; }
  Array& grad_mut(std::size_t id) { return nodes_[id].grad; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // `loss` must hold a single element; its gradient is seeded with 1.
  void backward(Var loss);
  void zero_grad();

 private:
  struct Node {
    Array value;
    Array grad;
    bool requires_grad = false;
    bool is_leaf = true;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace fpc::diff
