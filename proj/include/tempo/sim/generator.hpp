#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tempo/sim/cohort.hpp"
#include "tempo/sim/rng.hpp"

namespace tempo::sim {

// Stage-prior Dirichlet concentrations for the Dirichlet-multinomial prior:
// a Gaussian bump over stage indices 0..B-1 between kAlphaMin and kAlphaMax,
// centered at (B-1)/2 with width B/6.
inline constexpr double kAlphaMin = 0.35;
inline constexpr double kAlphaMax = 4.25;
inline constexpr double kUniformConcentration = 100.0;
std::vector<double> dm_alpha_profile(std::size_t n_biomarkers);

// Discrete experiments: a random permutation of 1..B (xi[b] is the rank of
// biomarker b). Continuous experiments: Beta(2,2) * B, before noise.
std::vector<double> sample_event_times(const ExperimentConfig& cfg, Rng& rng);

// Standard deviation of the per-participant event-time noise in continuous
// experiments.
double event_noise_sd(std::size_t n_biomarkers);

// Stages of `n_diseased` participants under the experiment's prior. The
// ordinal priors draw one stage distribution per call.
std::vector<double> sample_stages(const ExperimentConfig& cfg, Rng& rng,
                                  std::size_t n_diseased);

// Event time of biomarker b as seen by participant j: xi[b] plus an optional
// per-(participant, biomarker) offset.
struct EventTimes {
  std::vector<double> xi;
  std::vector<double> jitter;  // empty, or J x B row-major

  double at(std::size_t j, std::size_t b) const {
    return jitter.empty() ? xi[b] : xi[b] + jitter[j * xi.size() + b];
  }
};

// One draw from non-normal family 1..6 located/scaled by (mu, sigma), after
// the shared additive noise and clipping. `component`, when non-null,
// receives the index of the mixture component that produced the draw.
double sample_family(int family, double mu, double sigma, Rng& rng,
                     int* component = nullptr);

// Binary-switch measurements: post-event distribution once k_j >= event time.
// With `family` present, each biomarker draws from its non-normal family.
std::vector<double> measure_ebm(const EventTimes& events, std::span<const double> k,
                                const BiomarkerParams& params,
                                const std::vector<int>* family, Rng& rng);

// Per-biomarker sigmoid rate max(1, |R| / sqrt(theta_sigma^2 + phi_sigma^2)).
double sigmoid_rate(double phi_mu, double phi_sigma, double theta_mu,
                    double theta_sigma);
// delta * R / (1 + exp(-rate * (k - xi))).
double sigmoid_shift(double k, double xi, double amplitude, double rate, int delta);

// Pre-event baseline for everyone; participants with k > 0 add the signed
// sigmoid shift.
std::vector<double> measure_sigmoid(const EventTimes& events, std::span<const double> k,
                                    const BiomarkerParams& params,
                                    std::span<const int> delta, Rng& rng);

std::vector<int> sample_delta(std::size_t n_biomarkers, Rng& rng);
std::vector<int> sample_families(std::size_t n_biomarkers, Rng& rng);

// Number of biomarkers whose event time is <= k.
int ordinal_stage(std::span<const double> xi, double k);

BiomarkerParams default_param_sampler(std::size_t n_biomarkers, Rng& rng);

// Pure function of cfg (including cfg.seed).
Dataset generate_dataset(const ExperimentConfig& cfg);

}  // namespace tempo::sim
