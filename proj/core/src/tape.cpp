#include "sheafnn/tape.hpp"

#include "sheafnn/errors.hpp"

namespace sheafnn::nn {

Param::Param(std::string n, Matrix v)
    : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractError("Var: uninitialized handle");
  return tape_->value(*this);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, false, nullptr, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Param& p) {
  nodes_.push_back(Node{p.value, {}, false, true, &p, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, bool requires_grad, BackwardFn fn) {
  nodes_.push_back(Node{std::move(value), {}, false, requires_grad,
                        nullptr, requires_grad ? std::move(fn) : BackwardFn{}});
  return Var(this, nodes_.size() - 1);
}

Tape::Node& Tape::node(Var v) {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw ContractError("Tape: variable does not belong to this tape");
  }
  return nodes_[v.id_];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw ContractError("Tape: variable does not belong to this tape");
  }
  return nodes_[v.id_];
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

bool Tape::requires_grad(std::initializer_list<Var> vars) const {
  for (Var v : vars)
    if (node(v).requires_grad) return true;
  return false;
}

Matrix* Tape::grad_slot(Var v) {
  Node& n = node(v);
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return &n.grad;
}

const Matrix* Tape::grad(Var v) const {
  const Node& n = node(v);
  return n.has_grad ? &n.grad : nullptr;
}

void Tape::backward(Var loss) {
  if (nodes_.empty()) throw ContractError("backward: nothing has been recorded");
  if (backward_done_) throw ContractError("backward: already run for this recording");
  Node& root = node(loss);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " + shape_of(root.value));
  }
  backward_done_ = true;
  if (!root.requires_grad) return;
  *grad_slot(loss) = Matrix(1, 1, 1.0);

  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.fn) n.fn(n.grad);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

void Tape::clear() {
  nodes_.clear();
  backward_done_ = false;
}

}  // namespace sheafnn::nn
