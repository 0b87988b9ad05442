#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tempo/autodiff/ops.hpp"
#include "tempo/autodiff/tape.hpp"
#include "tempo/sim/cohort.hpp"

namespace tempo::model::inline TEMPO_PRECISION_NS {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;

struct ModelConfig {
  std::size_t n_biomarkers = 12;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t seq_layers = 4;
  std::size_t stage_layers = 2;
  std::size_t ffn_mult = 4;
  std::size_t detector_hidden = 32;
  double layer_norm_eps = 1e-5;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Tape handles for the three model outputs.
struct ForwardVars {
  Var s;      // [B x 1] event scores
  Var p;      // [J x B] abnormality probabilities
  Var y_hat;  // [J x 1] predicted stages
};

struct ForwardOutput {
  std::vector<double> s;
  std::vector<double> p;  // J x B row-major
  std::vector<double> y_hat;
};

// Two-branch network. The sequencing branch encodes every (measurement,
// diagnosis) pair, mean-pools over participants into one token per
// biomarker, and runs a biomarker Transformer into a scalar score per
// biomarker. The staging branch scores per-cell abnormality from
// (measurement, diagnosis, sigmoid(score)), projects each participant's
// abnormality profile, and runs a participant Transformer into a stage.
//
// Participant tokens carry no positional encoding, so scores are invariant
// and stages equivariant under participant permutation.
class TempoModel {
 public:
  TempoModel() = default;
  // Kaiming-uniform weights (bound 1/sqrt(fan_in)), unit layer-norm gains.
  TempoModel(ModelConfig cfg, std::uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(const std::string& name);
  const Parameter& parameter(const std::string& name) const;
  std::size_t parameter_count() const;
  void zero_grad();

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

  // Recorded forward with parameters bound as trainable leaves.
  ForwardVars forward(Tape& tape, const sim::Cohort& cohort);
  // Inference on frozen weights; safe to call concurrently.
  ForwardOutput predict(const sim::Cohort& cohort) const;

  // Individual stages, parameters bound as trainable leaves.
  Var patient_encode_pool(Tape& tape, const sim::Cohort& cohort);
  Var sequencing_forward(Tape& tape, Var tokens);
  Var abnormality_detect(Tape& tape, const sim::Cohort& cohort, Var scores);
  Var staging_forward(Tape& tape, Var abnormality);

  // Parameter indices of one layer.
  struct LinearIdx { std::size_t weight, bias; };
  struct NormIdx { std::size_t gain, bias; };
  struct BlockIdx {
    NormIdx ln1;
    LinearIdx q, k, v, o;
    NormIdx ln2;
    LinearIdx ff1, ff2;
  };

 private:
  using Bind = std::function<Var(std::size_t)>;

  std::size_t add_param(const std::string& name, ad::Shape shape);
  LinearIdx add_linear(const std::string& name, std::size_t in, std::size_t out);
  NormIdx add_norm(const std::string& name, std::size_t width);
  BlockIdx add_block(const std::string& name, std::size_t width);
  void init_weights(std::uint64_t seed);
  Bind trainable(Tape& tape);
  Bind frozen(Tape& tape) const;

  Var run_linear(Var x, const LinearIdx& l, const Bind& bind) const;
  Var run_norm(Var x, const NormIdx& n, const Bind& bind) const;
  Var run_block(Var x, const BlockIdx& blk, const Bind& bind) const;

  Var encode_pool_impl(Tape& tape, const sim::Cohort& cohort, const Bind& bind) const;
  Var sequencing_impl(Var tokens, const Bind& bind) const;
  Var detect_impl(Tape& tape, const sim::Cohort& cohort, Var scores, const Bind& bind) const;
  Var staging_impl(Var abnormality, const Bind& bind) const;
  ForwardVars forward_impl(Tape& tape, const sim::Cohort& cohort, const Bind& bind) const;

  ModelConfig cfg_;
  std::vector<Parameter> params_;

  LinearIdx enc1_{}, enc2_{};
  std::size_t pos_ = 0;
  std::vector<BlockIdx> seq_blocks_;
  NormIdx seq_norm_{};
  LinearIdx rank_head_{};
  LinearIdx det1_{}, det2_{};
  LinearIdx stage_enc_{};
  NormIdx stage_enc_norm_{};
  std::vector<BlockIdx> stage_blocks_;
  NormIdx stage_norm_{};
  LinearIdx head1_{};
  NormIdx head_norm_{};
  LinearIdx head2_{};
};

// Number of scalar weights for a configuration, without building a model.
std::size_t count_parameters(const ModelConfig& cfg);

}  // namespace tempo::model
