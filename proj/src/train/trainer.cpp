#include "tempo/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "tempo/errors.hpp"
#include "tempo/sim/generator.hpp"

namespace tempo::train::inline TEMPO_PRECISION_NS {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (n_train_datasets < 1 || n_val_datasets < 1) {
    throw ConfigError("training and validation dataset counts must be at least 1");
  }
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  weights.validate();
}

std::vector<TrainExample> make_examples(const std::vector<sim::Dataset>& datasets,
                                        TargetMode mode) {
  std::vector<TrainExample> out;
  out.reserve(datasets.size());
  for (const sim::Dataset& ds : datasets) {
    out.push_back({&ds.cohort, make_targets(ds.truth, mode)});
  }
  return out;
}

StepLosses training_step(model::TempoModel& model, ad::Adam& opt, const TrainExample& ex,
                         const LossWeights& w, sim::Rng& rng) {
  const auto pairs = valid_pairs(ex.targets.key);
  std::optional<std::pair<std::size_t, std::size_t>> pair;
  if (!pairs.empty()) pair = pairs[rng.below(pairs.size())];

  model.zero_grad();
  ad::Tape tape;
  const model::ForwardVars out = model.forward(tape, *ex.cohort);
  const LossVars loss = total_loss(out, ex.targets, w, pair);
  StepLosses r;
  r.total = loss.total.value()[0];
  r.seq = loss.seq.value()[0];
  r.stage = loss.stage.value()[0];
  r.pair_skipped = !pair.has_value();
  if (!std::isfinite(r.total)) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "non-finite training loss (seq %g, stage %g)", r.seq, r.stage);
    throw NumericError(msg);
  }
  tape.backward(loss.total);
  opt.step(model.parameters());
  return r;
}

namespace {

LossValues mean_loss(const model::TempoModel& model, const std::vector<TrainExample>& examples,
                     const LossWeights& w) {
  LossValues acc;
  for (const TrainExample& ex : examples) {
    const LossValues v = expected_loss(model.predict(*ex.cohort), ex.targets, w);
    acc.total += v.total;
    acc.seq += v.seq;
    acc.stage += v.stage;
  }
  const double n = static_cast<double>(examples.size());
  return {acc.total / n, acc.seq / n, acc.stage / n};
}

std::size_t common_biomarkers(const std::vector<sim::Dataset>& a,
                              const std::vector<sim::Dataset>& b) {
  std::size_t B = 0;
  for (const auto* set : {&a, &b}) {
    for (const sim::Dataset& ds : *set) {
      if (B == 0) B = ds.cohort.n_biomarkers;
      if (ds.cohort.n_biomarkers != B) {
        throw DimensionError("datasets mix biomarker counts " + std::to_string(B) + " and " +
                             std::to_string(ds.cohort.n_biomarkers));
      }
    }
  }
  return B;
}

}  // namespace

TrainResult fit(const TrainConfig& cfg, const std::vector<sim::Dataset>& train,
                const std::vector<sim::Dataset>& val, int experiment_id,
                const FitHooks& hooks) {
  cfg.validate();
  if (train.empty() || val.empty()) throw ConfigError("need training and validation datasets");
  const TargetMode mode = cfg.target_mode.value_or(target_mode_for(experiment_id));

  model::ModelConfig mcfg = cfg.model;
  mcfg.n_biomarkers = common_biomarkers(train, val);

  const std::vector<TrainExample> train_ex = make_examples(train, mode);
  const std::vector<TrainExample> val_ex = make_examples(val, mode);

  TrainResult result;
  result.target_mode = mode;
  result.model = model::TempoModel(mcfg, sim::derive_seed(cfg.seed, 3));
  model::TempoModel& model = result.model;
  ad::Adam opt(cfg.adam);
  sim::Rng rng(sim::derive_seed(cfg.seed, 4));

  std::vector<ad::Tensor> best = model.snapshot();
  result.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_ex.size());
  std::size_t skipped = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    EpochLog row;
    row.epoch = epoch;
    for (std::size_t idx : order) {
      StepLosses s;
      try {
        s = training_step(model, opt, train_ex[idx], cfg.weights, rng);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           ", training dataset " + std::to_string(idx));
      }
      if (s.pair_skipped) ++skipped;
      row.train_loss += s.total;
      row.train_seq += s.seq;
      row.train_stage += s.stage;
    }
    const double n = static_cast<double>(order.size());
    row.train_loss /= n;
    row.train_seq /= n;
    row.train_stage /= n;

    const LossValues v = mean_loss(model, val_ex, cfg.weights);
    if (!std::isfinite(v.total)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    row.val_loss = v.total;
    row.val_seq = v.seq;
    row.val_stage = v.stage;
    if (v.total < result.best_val_loss) {
      result.best_val_loss = v.total;
      result.best_epoch = epoch;
      best = model.snapshot();
    }
    result.log.push_back(row);
    if (hooks.on_epoch) hooks.on_epoch(row);
  }
  if (skipped > 0 && hooks.on_warning) {
    hooks.on_warning("pair term skipped on " + std::to_string(skipped) +
                     " steps with no valid biomarker pair");
  }
  model.restore(best);
  return result;
}

TrainResult fit(const TrainConfig& cfg, const sim::ExperimentConfig& exp,
                const FitHooks& hooks) {
  cfg.validate();
  exp.validate();
  auto generate = [&](std::size_t n, std::uint64_t stream) {
    std::vector<sim::Dataset> out;
    out.reserve(n);
    const std::uint64_t base = sim::derive_seed(cfg.seed, stream);
    for (std::size_t i = 0; i < n; ++i) {
      sim::ExperimentConfig c = exp;
      c.seed = sim::derive_seed(base, i);
      out.push_back(sim::generate_dataset(c));
    }
    return out;
  };
  const std::vector<sim::Dataset> train = generate(cfg.n_train_datasets, 1);
  const std::vector<sim::Dataset> val = generate(cfg.n_val_datasets, 2);
  return fit(cfg, train, val, exp.experiment_id, hooks);
}

void write_log_csv(std::ostream& os, const std::vector<EpochLog>& log) {
  os << "epoch,train_loss,train_seq,train_stage,val_loss,val_seq,val_stage\n";
  char buf[256];
  for (const EpochLog& r : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss,
                  r.train_seq, r.train_stage, r.val_loss, r.val_seq, r.val_stage);
    os << buf;
  }
}

}  // namespace tempo::train
