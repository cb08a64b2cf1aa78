#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "loongx/numerics/tensor.h"

namespace loongx {

/// Trainable leaf. `grad` accumulates across backward passes until zeroed.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool requires_grad = true;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape())) {}

  void zero_grad() {
    if (grad.shape() == value.shape()) {
      std::fill(grad.data().begin(), grad.data().end(), 0.0);
    } else {
      grad = Tensor::zeros(value.shape());
    }
  }
};

using ParamList = std::vector<Parameter*>;

class Tape;
using NodeId = std::uint32_t;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive and has not been reset.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  std::size_t numel() const { return value().numel(); }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Ordered record of primitive applications. Nodes are appended in execution
/// order, so insertion order is a valid topological order and backward walks
/// it in reverse, visiting each node once.
///
/// One tape belongs to one forward/backward pass; it is not thread-safe.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, NodeId)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var input(Tensor value, bool requires_grad = true);
  /// Records a parameter as a leaf; backward adds into `p.grad`.
  Var param(Parameter& p);

  /// Appends an op result. `fn` runs during backward only when the node
  /// requires grad; it reads `grad(self)` and accumulates into parents.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn fn);

  /// Reverse pass from a one-element loss. Throws std::logic_error when called
  /// twice without reset().
  void backward(Var loss);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  bool requires_grad(NodeId id) const { return nodes_[id].requires_grad; }
  const std::vector<NodeId>& parents(NodeId id) const { return nodes_[id].parents; }

  /// Upstream gradient of a node (zeros when nothing flowed into it).
  const Tensor& grad(NodeId id);
  const Tensor& grad(Var v) { return grad(v.id()); }
  /// Mutable gradient buffer of a parent, allocated as zeros on first use.
  /// Returns nullptr when the node does not require grad.
  Tensor* grad_buffer(NodeId id);

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }
  void reset();

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<NodeId> parents;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  Var push(Node node);

  // deque keeps value references stable while nodes are appended
  std::deque<Node> nodes_;
  bool grad_enabled_;
  bool backward_done_ = false;
};

}  // namespace loongx
