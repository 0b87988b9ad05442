#include "tempo/sim/cohort.hpp"

#include <cmath>
#include <string>

#include "tempo/errors.hpp"

namespace tempo::sim {

void BiomarkerParams::validate(std::size_t expected_b) const {
  const std::size_t b = phi_mu.size();
  if (b != expected_b || phi_sigma.size() != b || theta_mu.size() != b ||
      theta_sigma.size() != b) {
    throw ConfigError("biomarker parameters must all have length " +
                      std::to_string(expected_b));
  }
  for (std::size_t i = 0; i < b; ++i) {
    if (!(phi_sigma[i] >= 0.0) || !(theta_sigma[i] >= 0.0)) {
      throw ConfigError("biomarker " + std::to_string(i) +
                        " has a negative standard deviation");
    }
  }
}

ExperimentSpec experiment_spec(int id) {
  using enum EventTimeKind;
  using enum StagePrior;
  using enum MeasurementModel;
  switch (id) {
    case 1: return {kDiscrete, kDirichletMultinomial, kEbm, false};
    case 2: return {kDiscrete, kDirichletMultinomial, kEbm, true};
    case 3: return {kDiscrete, kUniform, kEbm, false};
    case 4: return {kDiscrete, kUniform, kEbm, true};
    case 5: return {kDiscrete, kBeta, kSigmoid, false};
    case 6: return {kDiscrete, kBeta, kEbm, false};
    case 7: return {kDiscrete, kBeta, kEbm, true};
    case 8: return {kContinuous, kBeta, kSigmoid, false};
    case 9: return {kContinuous, kBeta, kEbm, false};
    default:
      throw ConfigError("experiment id must be in 1..9, got " + std::to_string(id));
  }
}

void ExperimentConfig::validate() const {
  experiment_spec(experiment_id);
  if (n_biomarkers < 2) throw ConfigError("need at least 2 biomarkers");
  if (n_participants < 2) throw ConfigError("need at least 2 participants");
  if (!(healthy_fraction > 0.0 && healthy_fraction < 1.0)) {
    throw ConfigError("healthy fraction must lie in (0, 1)");
  }
  if (params) params->validate(n_biomarkers);
}

std::size_t ExperimentConfig::n_healthy() const {
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(n_participants) * healthy_fraction));
}

void standardize(Cohort& c) {
  const std::size_t J = c.n_participants, B = c.n_biomarkers;
  c.x.assign(J * B, 0.0);
  c.standardization.mean.assign(B, 0.0);
  c.standardization.std.assign(B, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    double m = 0.0;
    for (std::size_t j = 0; j < J; ++j) m += c.raw[j * B + b];
    m /= static_cast<double>(J);
    double v = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
      const double d = c.raw[j * B + b] - m;
      v += d * d;
    }
    const double sd = std::sqrt(v / static_cast<double>(J));
    c.standardization.mean[b] = m;
    c.standardization.std[b] = sd;
    if (sd < kDegenerateStd) continue;
    for (std::size_t j = 0; j < J; ++j) c.x[j * B + b] = (c.raw[j * B + b] - m) / sd;
  }
}

Cohort make_cohort(std::size_t n_participants, std::size_t n_biomarkers,
                   std::vector<double> raw, std::vector<int> dx) {
  if (raw.size() != n_participants * n_biomarkers || dx.size() != n_participants) {
    throw DimensionError("cohort: measurement matrix or diagnosis vector has the wrong size");
  }
  Cohort c;
  c.n_participants = n_participants;
  c.n_biomarkers = n_biomarkers;
  c.raw = std::move(raw);
  c.dx = std::move(dx);
  standardize(c);
  return c;
}

}  // namespace tempo::sim
