#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tempo/autodiff/tape.hpp"

namespace tempo::ad::inline TEMPO_PRECISION_NS {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are created lazily on the first
// step and must keep matching the parameter list passed to step().
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::span<Parameter> params);

  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace tempo::ad
