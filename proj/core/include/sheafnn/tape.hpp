#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>

#include "sheafnn/matrix.hpp"

namespace sheafnn::nn {

/// Trainable matrix with its accumulated gradient.
struct Param {
  Param(std::string name, Matrix value);

  void zero_grad() noexcept { grad.fill(0.0); }

  std::string name;
  Matrix value;
  Matrix grad;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Append-only record of matrix operations for reverse-mode
/// differentiation. Nodes are stored in creation order, which is a
/// topological order; `backward` walks them once in reverse.
class Tape {
 public:
  /// Receives the gradient of the loss with respect to the node's value.
  using BackwardFn = std::function<void(const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Value that never receives a gradient.
  Var constant(Matrix value);
  /// Leaf bound to `p`; `backward` adds into p.grad.
  Var param(Param& p);
  /// Result of an operation. `requires_grad` should be true iff any input
  /// requires a gradient; `fn` may be empty when it is false.
  Var record(Matrix value, bool requires_grad, BackwardFn fn);

  const Matrix& value(Var v) const;
  bool requires_grad(Var v) const;
  bool requires_grad(std::initializer_list<Var> vars) const;

  /// Zero-initialized gradient buffer of `v` to accumulate into, or nullptr
  /// if `v` does not require a gradient.
  Matrix* grad_slot(Var v);
  /// Gradient of `v` after `backward`, or nullptr if none reached it.
  const Matrix* grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be a 1×1 value
  /// recorded on this tape; calling twice on the same recording throws.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    Param* param = nullptr;
    BackwardFn fn;
  };

  Node& node(Var v);
  const Node& node(Var v) const;

  std::deque<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace sheafnn::nn
