#include "loongx/numerics/tape.h"

#include <stdexcept>

#include "loongx/numerics/errors.h"

namespace loongx {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::push(Node node) {
  if (backward_done_) throw std::logic_error("tape: recording after backward; call reset()");
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<NodeId>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::input(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad && grad_enabled_;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = p.requires_grad && grad_enabled_;
  if (n.requires_grad) n.param = &p;
  return push(std::move(n));
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(parents), std::move(fn));
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
  if (!value.all_finite()) {
    throw NonFiniteError("non-finite value produced at tape node " + std::to_string(nodes_.size()));
  }
  Node n;
  n.value = std::move(value);
  bool any = false;
  for (const auto& p : parents) {
    if (&p.tape() != this) throw std::logic_error("tape: parent recorded on a different tape");
    any = any || nodes_[p.id()].requires_grad;
  }
  if (any && grad_enabled_) {
    n.requires_grad = true;
    n.parents.reserve(parents.size());
    for (const auto& p : parents) n.parents.push_back(p.id());
    n.backward = std::move(fn);
  }
  return push(std::move(n));
}

const Tensor& Tape::grad(NodeId id) {
  auto& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor::zeros(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

Tensor* Tape::grad_buffer(NodeId id) {
  auto& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor::zeros(n.value.shape());
    n.has_grad = true;
  }
  return &n.grad;
}

void Tape::backward(Var loss) {
  if (backward_done_) throw std::logic_error("tape: backward called twice without reset");
  if (&loss.tape() != this) throw std::logic_error("tape: loss belongs to a different tape");
  if (loss.numel() != 1) {
    throw ShapeError("backward: loss must be a one-element tensor, got " + shape_str(loss.shape()));
  }
  backward_done_ = true;
  auto& root = nodes_[loss.id()];
  if (!root.requires_grad) return;
  root.grad = Tensor(root.value.shape(), 1.0);
  root.has_grad = true;
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    auto& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.has_grad || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, static_cast<NodeId>(i));
    if (n.param != nullptr) {
      if (n.param->grad.shape() != n.value.shape()) n.param->grad = Tensor::zeros(n.value.shape());
      auto g = n.param->grad.data();
      const auto src = n.grad.data();
      for (std::size_t k = 0; k < src.size(); ++k) g[k] += src[k];
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

}  // namespace loongx
