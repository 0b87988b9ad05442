#include "tempo/autodiff/adam.hpp"

#include <cmath>

#include "tempo/errors.hpp"

namespace tempo::ad::inline TEMPO_PRECISION_NS {

void Adam::step(std::span<Parameter> params) {
  if (m_.empty()) {
    for (const Parameter& p : params) {
      m_.emplace_back(p.value.shape());
      v_.emplace_back(p.value.shape());
    }
  }
  if (m_.size() != params.size()) {
    throw DimensionError("adam: parameter count changed between steps");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    if (m.shape() != p.value.shape() || p.grad.shape() != p.value.shape()) {
      throw DimensionError("adam: moment/gradient shape mismatch for '" + p.name + "'");
    }
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double g = p.grad[i];
      const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      m[i] = static_cast<Scalar>(mi);
      v[i] = static_cast<Scalar>(vi);
      const double update = cfg_.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps);
      p.value[i] = static_cast<Scalar>(p.value[i] - update);
    }
  }
}

}  // namespace tempo::ad
