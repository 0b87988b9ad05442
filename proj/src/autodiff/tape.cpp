#include "tempo/autodiff/tape.hpp"

#include <stdexcept>

#include "tempo/errors.hpp"

namespace tempo::ad::inline TEMPO_PRECISION_NS {

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, nullptr, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& param) {
  nodes_.push_back(Node{param.value, {}, false, nullptr, &param});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, BackwardFn backward) {
  nodes_.push_back(Node{std::move(value), {}, false, std::move(backward), nullptr});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.grad_ready) {
    n.grad = Tensor(n.value.shape());
    n.grad_ready = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (consumed_) {
    throw std::logic_error("computation record already consumed by backward()");
  }
  if (loss.tape() != this) {
    throw std::logic_error("loss does not belong to this computation record");
  }
  if (value(loss.id()).numel() != 1) {
    throw std::logic_error("backward() requires a scalar loss, got shape " +
                           shape_string(value(loss.id()).shape()));
  }
  consumed_ = true;
  grad(loss.id())[0] = Scalar{1};

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.grad_ready) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) {
      if (!n.grad.all_finite()) {
        throw NumericError("non-finite gradient for parameter '" +
                           n.param->name + "'");
      }
      Tensor& acc = n.param->grad;
      if (acc.shape() != n.value.shape()) acc = Tensor(n.value.shape());
      for (std::size_t k = 0; k < acc.numel(); ++k) acc[k] += n.grad[k];
    }
  }
}

}  // namespace tempo::ad
