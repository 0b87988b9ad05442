#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tempo/autodiff/ops.hpp"
#include "tempo/model/tempo_model.hpp"
#include "tempo/sim/cohort.hpp"
#include "tempo/target_mode.hpp"

namespace tempo::train::inline TEMPO_PRECISION_NS {

using ad::Var;
using tempo::TargetMode;

struct LossWeights {
  double lambda_seq = 1.0;
  double lambda_stage = 1.0;
  double seq_direct_weight = 0.5;
  double seq_pair_weight = 0.5;

  void validate() const;
};

struct TrainTargets {
  TargetMode mode = TargetMode::kRank;
  std::vector<double> t;        // normalized sequencing targets, [0, 1]
  std::vector<double> key;      // rank (kRank) or event time (kTime) per biomarker
  std::vector<int> y_star;      // ordinal stage per participant
};

TrainTargets make_targets(const sim::GroundTruth& truth, TargetMode mode);

// Unordered pairs (a < b) whose keys differ.
std::vector<std::pair<std::size_t, std::size_t>> valid_pairs(std::span<const double> key);

// Plain-value forms of the loss terms.
double direct_loss(std::span<const double> s, std::span<const double> t);
// Binary cross-entropy of sigmoid(s_b - s_a) against 1[r_a < r_b].
double pair_loss_discrete(double s_a, double s_b, double r_a, double r_b);
double pair_loss_continuous(double s_a, double s_b, double t_a, double t_b);
double stage_loss(std::span<const double> y_hat, std::span<const int> y_star,
                  std::size_t n_biomarkers);

// Recorded forms. `s` and `y_hat` are column vectors from the model.
Var loss_direct(Var s, std::span<const double> t);
Var loss_pair_discrete(Var s, std::size_t a, std::size_t b, double r_a, double r_b);
Var loss_pair_continuous(Var s, std::size_t a, std::size_t b, double t_a, double t_b);
Var loss_stage(Var y_hat, std::span<const int> y_star, std::size_t n_biomarkers);

struct LossVars {
  Var total;
  Var seq;    // direct/pair mix before lambda_seq
  Var stage;  // before lambda_stage
};

// lambda_seq * (w_d * L_direct + w_p * L_pair) + lambda_stage * L_stage.
// Without a pair the pair term is dropped.
LossVars total_loss(const model::ForwardVars& out, const TrainTargets& targets,
                    const LossWeights& w,
                    std::optional<std::pair<std::size_t, std::size_t>> pair);

struct LossValues {
  double total = 0.0;
  double seq = 0.0;
  double stage = 0.0;
};

// Total loss of a prediction with the pair term averaged over every valid
// pair instead of sampled.
LossValues expected_loss(const model::ForwardOutput& out, const TrainTargets& targets,
                         const LossWeights& w);

}  // namespace tempo::train
