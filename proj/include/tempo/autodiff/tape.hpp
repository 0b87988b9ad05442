#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "tempo/autodiff/tensor.hpp"

namespace tempo::ad::inline TEMPO_PRECISION_NS {

// A learnable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(Scalar{0}); }
};

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Linear record of primitive-op applications. Nodes are appended in
// evaluation order, so the node list is already topologically sorted and a
// single reverse sweep visits every op once.
//
// A tape is single-use: backward() may be called at most once.
class Tape {
 public:
  // Called with the tape and the id of the node being differentiated.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf bound to a parameter; backward() accumulates into param.grad.
  Var param(Parameter& param);

  // Appends a node. `backward` reads grad(out) and accumulates into the
  // gradients of its inputs; it is skipped when no gradient reached `out`.
  Var record(Tensor value, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  // Gradient buffer for a node, allocated on first access.
  Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return nodes_[id].grad_ready; }

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  // Reverse sweep from a scalar loss. Throws std::logic_error on reuse or a
  // non-scalar loss and NumericError if any parameter gradient is not finite.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool grad_ready = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

}  // namespace tempo::ad
