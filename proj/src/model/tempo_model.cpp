#include "tempo/model/tempo_model.hpp"

#include <cmath>
#include <stdexcept>

#include "tempo/errors.hpp"
#include "tempo/sim/rng.hpp"

namespace tempo::model::inline TEMPO_PRECISION_NS {

using ad::Scalar;

void ModelConfig::validate() const {
  if (n_biomarkers < 2) throw ConfigError("model needs at least 2 biomarkers");
  if (d_model == 0 || n_heads == 0) throw ConfigError("d_model and n_heads must be positive");
  if (d_model % n_heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by " +
                      std::to_string(n_heads) + " heads");
  }
  if (seq_layers == 0 || stage_layers == 0) throw ConfigError("layer counts must be positive");
  if (ffn_mult == 0 || detector_hidden == 0) throw ConfigError("hidden widths must be positive");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be positive");
}

TempoModel::TempoModel(ModelConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.d_model, d2 = 2 * d, B = cfg_.n_biomarkers;

  enc1_ = add_linear("seq.patient_encoder.fc1", 2, d);
  enc2_ = add_linear("seq.patient_encoder.fc2", d, d);
  pos_ = add_param("seq.pos_embedding", {B, d});
  for (std::size_t i = 0; i < cfg_.seq_layers; ++i) {
    seq_blocks_.push_back(add_block("seq.blocks." + std::to_string(i), d));
  }
  seq_norm_ = add_norm("seq.final_norm", d);
  rank_head_ = add_linear("seq.rank_head", d, 1);

  det1_ = add_linear("stage.detector.fc1", 3, cfg_.detector_hidden);
  det2_ = add_linear("stage.detector.fc2", cfg_.detector_hidden, 1);
  stage_enc_ = add_linear("stage.encoder.fc", B, d2);
  stage_enc_norm_ = add_norm("stage.encoder.norm", d2);
  for (std::size_t i = 0; i < cfg_.stage_layers; ++i) {
    stage_blocks_.push_back(add_block("stage.blocks." + std::to_string(i), d2));
  }
  stage_norm_ = add_norm("stage.final_norm", d2);
  head1_ = add_linear("stage.head.fc1", d2, d2);
  head_norm_ = add_norm("stage.head.norm", d2);
  head2_ = add_linear("stage.head.fc2", d2, 1);

  init_weights(init_seed);
}

std::size_t TempoModel::add_param(const std::string& name, ad::Shape shape) {
  for (const Parameter& p : params_) {
    if (p.name == name) throw std::logic_error("duplicate parameter name " + name);
  }
  params_.emplace_back(name, Tensor(std::move(shape)));
  return params_.size() - 1;
}

TempoModel::LinearIdx TempoModel::add_linear(const std::string& name, std::size_t in,
                                             std::size_t out) {
  const std::size_t w = add_param(name + ".weight", {in, out});
  const std::size_t b = add_param(name + ".bias", {out});
  return {w, b};
}

TempoModel::NormIdx TempoModel::add_norm(const std::string& name, std::size_t width) {
  const std::size_t g = add_param(name + ".gain", {width});
  const std::size_t b = add_param(name + ".bias", {width});
  return {g, b};
}

TempoModel::BlockIdx TempoModel::add_block(const std::string& name, std::size_t width) {
  BlockIdx blk{};
  blk.ln1 = add_norm(name + ".norm1", width);
  blk.q = add_linear(name + ".attn.q", width, width);
  blk.k = add_linear(name + ".attn.k", width, width);
  blk.v = add_linear(name + ".attn.v", width, width);
  blk.o = add_linear(name + ".attn.out", width, width);
  blk.ln2 = add_norm(name + ".norm2", width);
  blk.ff1 = add_linear(name + ".ffn.fc1", width, width * cfg_.ffn_mult);
  blk.ff2 = add_linear(name + ".ffn.fc2", width * cfg_.ffn_mult, width);
  return blk;
}

void TempoModel::init_weights(std::uint64_t seed) {
  sim::Rng rng(seed);
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  // Linear biases share the fan-in of their weight, which always precedes them.
  std::size_t fan_in = 1;
  for (Parameter& p : params_) {
    if (ends_with(p.name, ".gain")) {
      p.value.fill(Scalar{1});
    } else if (p.name.find("norm") != std::string::npos && ends_with(p.name, ".bias")) {
      p.value.fill(Scalar{0});
    } else if (p.name == "seq.pos_embedding") {
      for (Scalar& v : p.value.values()) v = static_cast<Scalar>(rng.uniform(-0.02, 0.02));
    } else {
      if (ends_with(p.name, ".weight")) fan_in = p.value.dim(0);
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (Scalar& v : p.value.values()) v = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
    p.grad = Tensor(p.value.shape());
  }
}

Parameter& TempoModel::parameter(const std::string& name) {
  for (Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named " + name);
}

const Parameter& TempoModel::parameter(const std::string& name) const {
  return const_cast<TempoModel*>(this)->parameter(name);
}

std::size_t TempoModel::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.numel();
  return n;
}

void TempoModel::zero_grad() {
  for (Parameter& p : params_) p.zero_grad();
}

std::vector<Tensor> TempoModel::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const Parameter& p : params_) out.push_back(p.value);
  return out;
}

void TempoModel::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) throw DimensionError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != params_[i].value.shape()) {
      throw DimensionError("restore: shape mismatch for " + params_[i].name);
    }
    params_[i].value = values[i];
  }
}

TempoModel::Bind TempoModel::trainable(Tape& tape) {
  return [this, &tape](std::size_t i) { return tape.param(params_[i]); };
}

TempoModel::Bind TempoModel::frozen(Tape& tape) const {
  return [this, &tape](std::size_t i) { return tape.constant(params_[i].value); };
}

namespace {

void check_finite(Var v, const char* where) {
  if (!v.value().all_finite()) {
    throw NumericError(std::string("non-finite activation in ") + where);
  }
}

}  // namespace

Var TempoModel::run_linear(Var x, const LinearIdx& l, const Bind& bind) const {
  return ad::linear(x, bind(l.weight), bind(l.bias));
}

Var TempoModel::run_norm(Var x, const NormIdx& n, const Bind& bind) const {
  return ad::layer_norm(x, bind(n.gain), bind(n.bias), cfg_.layer_norm_eps);
}

// Pre-norm encoder block.
Var TempoModel::run_block(Var x, const BlockIdx& blk, const Bind& bind) const {
  const ad::AttentionParams ap{bind(blk.q.weight), bind(blk.q.bias), bind(blk.k.weight),
                               bind(blk.k.bias),   bind(blk.v.weight), bind(blk.v.bias),
                               bind(blk.o.weight), bind(blk.o.bias)};
  const Var attn = ad::multi_head_self_attention(run_norm(x, blk.ln1, bind), ap, cfg_.n_heads);
  const Var h = ad::add(x, attn);
  const Var ff = run_linear(ad::relu(run_linear(run_norm(h, blk.ln2, bind), blk.ff1, bind)),
                            blk.ff2, bind);
  return ad::add(h, ff);
}

Var TempoModel::encode_pool_impl(Tape& tape, const sim::Cohort& cohort,
                                 const Bind& bind) const {
  const std::size_t J = cohort.n_participants, B = cohort.n_biomarkers;
  if (J == 0) throw DimensionError("patient encoder: cohort has no participants");
  if (B != cfg_.n_biomarkers) {
    throw DimensionError("cohort has " + std::to_string(B) + " biomarkers, model expects " +
                         std::to_string(cfg_.n_biomarkers));
  }
  // Row b*J + j holds (x[j,b], d[j]).
  Tensor z({B * J, 2});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t j = 0; j < J; ++j) {
      z[(b * J + j) * 2] = static_cast<Scalar>(cohort.at(j, b));
      z[(b * J + j) * 2 + 1] = static_cast<Scalar>(cohort.dx[j]);
    }
  }
  const Var h = run_linear(ad::relu(run_linear(tape.constant(std::move(z)), enc1_, bind)),
                           enc2_, bind);
  const Var tokens = ad::add(ad::segment_mean(h, B), bind(pos_));
  check_finite(tokens, "patient encoder");
  return tokens;
}

Var TempoModel::sequencing_impl(Var tokens, const Bind& bind) const {
  if (tokens.shape() != ad::Shape{cfg_.n_biomarkers, cfg_.d_model}) {
    throw DimensionError("biomarker tokens must be " +
                         ad::shape_string({cfg_.n_biomarkers, cfg_.d_model}));
  }
  Var x = tokens;
  for (const BlockIdx& blk : seq_blocks_) x = run_block(x, blk, bind);
  check_finite(x, "biomarker transformer");
  const Var s = run_linear(run_norm(x, seq_norm_, bind), rank_head_, bind);
  check_finite(s, "ranking head");
  return s;
}

Var TempoModel::detect_impl(Tape& tape, const sim::Cohort& cohort, Var scores,
                            const Bind& bind) const {
  const std::size_t J = cohort.n_participants, B = cohort.n_biomarkers;
  if (scores.value().numel() != B) throw DimensionError("abnormality detector: score length != B");
  // Row j*B + b holds (x[j,b], d[j], sigmoid(s[b])).
  Tensor fixed({J * B, 2});
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t b = 0; b < B; ++b) {
      fixed[(j * B + b) * 2] = static_cast<Scalar>(cohort.at(j, b));
      fixed[(j * B + b) * 2 + 1] = static_cast<Scalar>(cohort.dx[j]);
    }
  }
  const Var sig = ad::tile_rows(ad::sigmoid(ad::reshape(scores, {B, 1})), J);
  const Var parts[] = {tape.constant(std::move(fixed)), sig};
  const Var in = ad::concat_cols(parts);
  const Var hidden = ad::relu(run_linear(in, det1_, bind));
  const Var p = ad::reshape(ad::sigmoid(run_linear(hidden, det2_, bind)), {J, B});
  check_finite(p, "abnormality detector");
  return p;
}

Var TempoModel::staging_impl(Var abnormality, const Bind& bind) const {
  if (abnormality.value().rank() != 2 || abnormality.value().dim(1) != cfg_.n_biomarkers) {
    throw DimensionError("abnormality matrix must have " + std::to_string(cfg_.n_biomarkers) +
                         " columns");
  }
  Var x = ad::relu(run_norm(run_linear(abnormality, stage_enc_, bind), stage_enc_norm_, bind));
  check_finite(x, "stage encoder");
  for (const BlockIdx& blk : stage_blocks_) x = run_block(x, blk, bind);
  check_finite(x, "patient transformer");
  x = run_norm(x, stage_norm_, bind);
  const Var hidden = ad::relu(run_norm(run_linear(x, head1_, bind), head_norm_, bind));
  const Var y = run_linear(hidden, head2_, bind);
  check_finite(y, "stage head");
  return y;
}

ForwardVars TempoModel::forward_impl(Tape& tape, const sim::Cohort& cohort,
                                     const Bind& bind) const {
  ForwardVars out;
  out.s = sequencing_impl(encode_pool_impl(tape, cohort, bind), bind);
  out.p = detect_impl(tape, cohort, out.s, bind);
  out.y_hat = staging_impl(out.p, bind);
  return out;
}

ForwardVars TempoModel::forward(Tape& tape, const sim::Cohort& cohort) {
  return forward_impl(tape, cohort, trainable(tape));
}

ForwardOutput TempoModel::predict(const sim::Cohort& cohort) const {
  Tape tape;
  const ForwardVars v = forward_impl(tape, cohort, frozen(tape));
  auto to_vec = [](const Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); };
  return {to_vec(v.s.value()), to_vec(v.p.value()), to_vec(v.y_hat.value())};
}

Var TempoModel::patient_encode_pool(Tape& tape, const sim::Cohort& cohort) {
  return encode_pool_impl(tape, cohort, trainable(tape));
}

Var TempoModel::sequencing_forward(Tape& tape, Var tokens) {
  return sequencing_impl(tokens, trainable(tape));
}

Var TempoModel::abnormality_detect(Tape& tape, const sim::Cohort& cohort, Var scores) {
  return detect_impl(tape, cohort, scores, trainable(tape));
}

Var TempoModel::staging_forward(Tape& tape, Var abnormality) {
  return staging_impl(abnormality, trainable(tape));
}

std::size_t count_parameters(const ModelConfig& cfg) {
  return TempoModel(cfg, 0).parameter_count();
}

}  // namespace tempo::model
