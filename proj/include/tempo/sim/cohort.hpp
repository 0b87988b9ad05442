#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tempo::sim {

// Per-biomarker pre-event (phi) and post-event (theta) distribution
// parameters, in the biomarker's own measurement units.
struct BiomarkerParams {
  std::vector<double> phi_mu;
  std::vector<double> phi_sigma;
  std::vector<double> theta_mu;
  std::vector<double> theta_sigma;

  std::size_t size() const { return phi_mu.size(); }
  // Throws ConfigError on ragged lengths or negative standard deviations.
  void validate(std::size_t expected_b) const;
};

enum class EventTimeKind { kDiscrete, kContinuous };
enum class StagePrior { kDirichletMultinomial, kUniform, kBeta };
enum class MeasurementModel { kEbm, kSigmoid };

// Generative routing of one of the nine experiments.
struct ExperimentSpec {
  EventTimeKind events;
  StagePrior prior;
  MeasurementModel measurement;
  bool non_normal;
};

ExperimentSpec experiment_spec(int experiment_id);

struct ExperimentConfig {
  int experiment_id = 1;
  std::size_t n_biomarkers = 12;
  std::size_t n_participants = 200;
  double healthy_fraction = 0.21;
  std::uint64_t seed = 0;
  // Fixed parameters; when absent each dataset samples its own.
  std::optional<BiomarkerParams> params;

  void validate() const;
  std::size_t n_healthy() const;
};

struct GroundTruth {
  std::vector<double> xi;      // event time per biomarker (pre-noise)
  std::vector<double> k;       // stage per participant, 0 for healthy
  std::vector<int> y_star;     // ordinal stage per participant
  std::optional<std::vector<int>> delta;   // Sigmoid experiments
  std::optional<std::vector<int>> family;  // non-normal experiments, 1..6
  BiomarkerParams params;
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> std;
};

// Columns with a standard deviation below this map to all zeros.
inline constexpr double kDegenerateStd = 1e-12;

// J x B measurements, row-major, plus diagnosis labels.
struct Cohort {
  std::size_t n_participants = 0;
  std::size_t n_biomarkers = 0;
  std::vector<double> raw;  // measurement units
  std::vector<double> x;    // z-scored with `standardization`
  std::vector<int> dx;      // 0 healthy, 1 diseased
  Standardization standardization;

  double raw_at(std::size_t j, std::size_t b) const { return raw[j * n_biomarkers + b]; }
  double at(std::size_t j, std::size_t b) const { return x[j * n_biomarkers + b]; }
};

// Z-scores every column of `raw` with its own population mean and standard
// deviation and fills `x` and `standardization`.
void standardize(Cohort& cohort);

Cohort make_cohort(std::size_t n_participants, std::size_t n_biomarkers,
                   std::vector<double> raw, std::vector<int> dx);

struct Dataset {
  int experiment_id = 0;
  std::uint64_t seed = 0;
  Cohort cohort;
  GroundTruth truth;
};

}  // namespace tempo::sim
