#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tempo/autodiff/adam.hpp"
#include "tempo/model/tempo_model.hpp"
#include "tempo/sim/cohort.hpp"
#include "tempo/sim/rng.hpp"
#include "tempo/train/losses.hpp"

namespace tempo::train::inline TEMPO_PRECISION_NS {

struct TrainConfig {
  std::size_t n_train_datasets = 950;
  std::size_t n_val_datasets = 50;
  std::size_t epochs = 25;
  ad::AdamConfig adam;
  std::uint64_t seed = 0;
  // Defaults to the experiment's natural mode.
  std::optional<TargetMode> target_mode;
  LossWeights weights;
  // n_biomarkers is taken from the data.
  model::ModelConfig model;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0, train_seq = 0.0, train_stage = 0.0;
  double val_loss = 0.0, val_seq = 0.0, val_stage = 0.0;
};

struct StepLosses {
  double total = 0.0;
  double seq = 0.0;
  double stage = 0.0;
  bool pair_skipped = false;
};

struct TrainExample {
  const sim::Cohort* cohort = nullptr;
  TrainTargets targets;
};

std::vector<TrainExample> make_examples(const std::vector<sim::Dataset>& datasets,
                                        TargetMode mode);

// One forward on the full cohort, one sampled valid pair, backward and an
// Adam update. Throws NumericError on a non-finite loss.
StepLosses training_step(model::TempoModel& model, ad::Adam& opt, const TrainExample& ex,
                         const LossWeights& w, sim::Rng& rng);

struct FitHooks {
  std::function<void(const EpochLog&)> on_epoch;
  std::function<void(const std::string&)> on_warning;
};

struct TrainResult {
  model::TempoModel model;  // best-validation weights
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  TargetMode target_mode = TargetMode::kRank;
};

// Seeds: init derive(seed, 3); pair sampling and shuffling derive(seed, 4).
TrainResult fit(const TrainConfig& cfg, const std::vector<sim::Dataset>& train,
                const std::vector<sim::Dataset>& val, int experiment_id,
                const FitHooks& hooks = {});

// Generates cfg.n_train_datasets + cfg.n_val_datasets cohorts from `exp`
// (train i: seed derive(derive(cfg.seed, 1), i); val i: derive(derive(cfg.seed, 2), i)).
TrainResult fit(const TrainConfig& cfg, const sim::ExperimentConfig& exp,
                const FitHooks& hooks = {});

void write_log_csv(std::ostream& os, const std::vector<EpochLog>& log);

}  // namespace tempo::train
