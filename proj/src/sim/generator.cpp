#include "tempo/sim/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tempo/errors.hpp"

namespace tempo::sim {

std::vector<double> dm_alpha_profile(std::size_t n_biomarkers) {
  const double B = static_cast<double>(n_biomarkers);
  const double center = (B - 1.0) / 2.0;
  const double width = B / 6.0;
  std::vector<double> alpha(n_biomarkers);
  for (std::size_t i = 0; i < n_biomarkers; ++i) {
    const double z = static_cast<double>(i) - center;
    alpha[i] = kAlphaMin + (kAlphaMax - kAlphaMin) * std::exp(-z * z / (2.0 * width * width));
  }
  return alpha;
}

std::vector<double> sample_event_times(const ExperimentConfig& cfg, Rng& rng) {
  const std::size_t B = cfg.n_biomarkers;
  std::vector<double> xi(B);
  if (experiment_spec(cfg.experiment_id).events == EventTimeKind::kDiscrete) {
    // perm[r] is the biomarker occupying rank r + 1.
    const auto perm = rng.permutation(B);
    for (std::size_t r = 0; r < B; ++r) xi[perm[r]] = static_cast<double>(r + 1);
  } else {
    for (double& v : xi) v = rng.beta(2.0, 2.0) * static_cast<double>(B);
  }
  return xi;
}

double event_noise_sd(std::size_t n_biomarkers) {
  return 0.05 * static_cast<double>(n_biomarkers);
}

std::vector<double> sample_stages(const ExperimentConfig& cfg, Rng& rng,
                                  std::size_t n_diseased) {
  if (n_diseased < 1) throw ConfigError("sample_stages: need at least one diseased participant");
  const std::size_t B = cfg.n_biomarkers;
  std::vector<double> k(n_diseased);
  const StagePrior prior = experiment_spec(cfg.experiment_id).prior;
  if (prior == StagePrior::kBeta) {
    const double scale = static_cast<double>(B);
    for (double& v : k) {
      do {
        v = rng.beta(5.0, 2.0) * scale;
      } while (v <= 0.0);
      v = std::min(v, scale);
    }
    return k;
  }
  const std::vector<double> alpha = prior == StagePrior::kDirichletMultinomial
                                        ? dm_alpha_profile(B)
                                        : std::vector<double>(B, kUniformConcentration);
  const std::vector<double> pi = rng.dirichlet(alpha);
  for (double& v : k) v = static_cast<double>(rng.categorical(pi) + 1);
  return k;
}

double sample_family(int family, double mu, double sigma, Rng& rng, int* component) {
  auto third = [&rng] { return static_cast<int>(rng.below(3)); };
  auto sign = [&rng] { return rng.bernoulli(0.5) ? 1.0 : -1.0; };
  int comp = 0;
  double x = 0.0;
  switch (family) {
    case 1:
      comp = third();
      if (comp == 0) x = rng.triangular(mu - 2.0 * sigma, mu - 1.5 * sigma, mu);
      else if (comp == 1) x = rng.normal(mu + sigma, 0.3 * sigma);
      else x = rng.exponential(0.7 * sigma) + (mu - 0.5 * sigma);
      break;
    case 2:
      comp = third();
      if (comp == 0) x = rng.pareto(1.5) * sigma + (mu - 2.0 * sigma);
      else if (comp == 1) x = rng.uniform(mu - 1.5 * sigma, mu + 1.5 * sigma);
      else x = rng.logistic(mu, sigma);
      break;
    case 3:
      comp = third();
      if (comp == 0) x = rng.beta(0.5, 0.5) * 4.0 * sigma + (mu - 2.0 * sigma);
      else if (comp == 1) x = rng.exponential(0.4 * sigma) * sign() + mu;
      else x = rng.normal(mu, 0.5 * sigma) + (rng.bernoulli(0.5) ? 2.0 * sigma : 0.0);
      break;
    case 4:
      comp = third();
      if (comp == 0) x = rng.gamma(2.0, 0.5 * sigma) + (mu - sigma);
      else if (comp == 1) x = rng.weibull(1.0) * sigma + (mu - sigma);
      else x = rng.normal(mu, 0.5 * sigma) + sign() * sigma;
      break;
    case 5: {
      // Heavy tail: own noise term and a tighter clip, no shared post-step.
      x = rng.cauchy(mu, sigma) + rng.normal(0.0, 0.2 * sigma);
      if (component) *component = 0;
      return std::clamp(x, mu - 4.0 * sigma, mu + 4.0 * sigma);
    }
    case 6:
      comp = rng.bernoulli(0.1) ? 0 : 1;
      x = comp == 0 ? rng.normal(mu, 0.2 * sigma) : rng.logistic(mu + sigma, 2.0 * sigma);
      break;
    default:
      throw ConfigError("non-normal family must be in 1..6, got " + std::to_string(family));
  }
  if (component) *component = comp;
  x += rng.normal(0.0, 0.2 * sigma);
  return std::clamp(x, mu - 5.0 * sigma, mu + 5.0 * sigma);
}

std::vector<double> measure_ebm(const EventTimes& events, std::span<const double> k,
                                const BiomarkerParams& params,
                                const std::vector<int>* family, Rng& rng) {
  const std::size_t B = events.xi.size(), J = k.size();
  params.validate(B);
  if (family && family->size() != B) throw DimensionError("measure_ebm: family length != B");
  std::vector<double> x(J * B);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t b = 0; b < B; ++b) {
      const bool post = k[j] >= events.at(j, b);
      const double mu = post ? params.theta_mu[b] : params.phi_mu[b];
      const double sd = post ? params.theta_sigma[b] : params.phi_sigma[b];
      x[j * B + b] = family ? sample_family((*family)[b], mu, sd, rng)
                            : mu + sd * rng.normal();
    }
  }
  return x;
}

double sigmoid_rate(double phi_mu, double phi_sigma, double theta_mu, double theta_sigma) {
  const double amplitude = theta_mu - phi_mu;
  const double pooled = std::sqrt(theta_sigma * theta_sigma + phi_sigma * phi_sigma);
  if (pooled == 0.0) {
    return amplitude == 0.0 ? 1.0 : std::numeric_limits<double>::max();
  }
  return std::max(1.0, std::abs(amplitude) / pooled);
}

double sigmoid_shift(double k, double xi, double amplitude, double rate, int delta) {
  return static_cast<double>(delta) * amplitude / (1.0 + std::exp(-rate * (k - xi)));
}

std::vector<double> measure_sigmoid(const EventTimes& events, std::span<const double> k,
                                    const BiomarkerParams& params,
                                    std::span<const int> delta, Rng& rng) {
  const std::size_t B = events.xi.size(), J = k.size();
  params.validate(B);
  if (delta.size() != B) throw DimensionError("measure_sigmoid: delta length != B");
  std::vector<double> rate(B), amplitude(B);
  for (std::size_t b = 0; b < B; ++b) {
    amplitude[b] = params.theta_mu[b] - params.phi_mu[b];
    rate[b] = sigmoid_rate(params.phi_mu[b], params.phi_sigma[b], params.theta_mu[b],
                           params.theta_sigma[b]);
  }
  std::vector<double> x(J * B);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t b = 0; b < B; ++b) {
      double v = params.phi_mu[b] + params.phi_sigma[b] * rng.normal();
      if (k[j] > 0.0) v += sigmoid_shift(k[j], events.at(j, b), amplitude[b], rate[b], delta[b]);
      x[j * B + b] = v;
    }
  }
  return x;
}

std::vector<int> sample_delta(std::size_t n_biomarkers, Rng& rng) {
  std::vector<int> delta(n_biomarkers);
  for (int& d : delta) d = rng.bernoulli(0.5) ? -1 : 1;
  return delta;
}

std::vector<int> sample_families(std::size_t n_biomarkers, Rng& rng) {
  std::vector<int> fam(n_biomarkers);
  for (int& f : fam) f = static_cast<int>(rng.below(6)) + 1;
  return fam;
}

int ordinal_stage(std::span<const double> xi, double k) {
  return static_cast<int>(std::count_if(xi.begin(), xi.end(),
                                        [k](double t) { return t <= k; }));
}

BiomarkerParams default_param_sampler(std::size_t n_biomarkers, Rng& rng) {
  if (n_biomarkers < 2) throw ConfigError("default_param_sampler: need at least 2 biomarkers");
  BiomarkerParams p;
  p.phi_mu.resize(n_biomarkers);
  p.phi_sigma.resize(n_biomarkers);
  p.theta_mu.resize(n_biomarkers);
  p.theta_sigma.resize(n_biomarkers);
  for (std::size_t b = 0; b < n_biomarkers; ++b) {
    p.phi_mu[b] = rng.uniform(-1.0, 1.0);
    p.phi_sigma[b] = rng.uniform(0.5, 1.5);
    p.theta_sigma[b] = rng.uniform(0.5, 1.5);
    const double effect = rng.uniform(1.0, 3.0);
    const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double pooled =
        std::sqrt((p.phi_sigma[b] * p.phi_sigma[b] + p.theta_sigma[b] * p.theta_sigma[b]) / 2.0);
    p.theta_mu[b] = p.phi_mu[b] + sign * effect * pooled;
  }
  return p;
}

Dataset generate_dataset(const ExperimentConfig& cfg) {
  cfg.validate();
  const ExperimentSpec spec = experiment_spec(cfg.experiment_id);
  const std::size_t B = cfg.n_biomarkers, J = cfg.n_participants;
  const std::size_t n_healthy = std::min(cfg.n_healthy(), J);
  const std::size_t n_diseased = J - n_healthy;

  Dataset ds;
  ds.experiment_id = cfg.experiment_id;
  ds.seed = cfg.seed;
  GroundTruth& truth = ds.truth;

  if (cfg.params) {
    truth.params = *cfg.params;
  } else {
    Rng rng(cfg.seed, Stream::kParams);
    truth.params = default_param_sampler(B, rng);
  }

  {
    Rng rng(cfg.seed, Stream::kEventTimes);
    truth.xi = sample_event_times(cfg, rng);
  }

  // Healthy participants occupy the first rows.
  truth.k.assign(J, 0.0);
  if (n_diseased > 0) {
    Rng rng(cfg.seed, Stream::kStages);
    const auto k = sample_stages(cfg, rng, n_diseased);
    std::copy(k.begin(), k.end(), truth.k.begin() + static_cast<std::ptrdiff_t>(n_healthy));
  }

  {
    Rng rng(cfg.seed, Stream::kFamilyDelta);
    if (spec.non_normal) truth.family = sample_families(B, rng);
    if (spec.measurement == MeasurementModel::kSigmoid) truth.delta = sample_delta(B, rng);
  }

  EventTimes events{truth.xi, {}};
  if (spec.events == EventTimeKind::kContinuous) {
    Rng rng(cfg.seed, Stream::kEventNoise);
    const double sd = event_noise_sd(B);
    events.jitter.resize(J * B);
    for (std::size_t j = 0; j < J; ++j) {
      for (std::size_t b = 0; b < B; ++b) {
        const double eps = rng.normal(0.0, sd);
        // Healthy participants stay at stage 0 and never cross an event.
        events.jitter[j * B + b] = j < n_healthy ? 0.0 : eps;
      }
    }
  }

  std::vector<double> raw;
  {
    Rng rng(cfg.seed, Stream::kMeasurements);
    if (spec.measurement == MeasurementModel::kSigmoid) {
      raw = measure_sigmoid(events, truth.k, truth.params, *truth.delta, rng);
    } else {
      raw = measure_ebm(events, truth.k, truth.params,
                        truth.family ? &*truth.family : nullptr, rng);
    }
  }

  truth.y_star.resize(J);
  for (std::size_t j = 0; j < J; ++j) truth.y_star[j] = ordinal_stage(truth.xi, truth.k[j]);

  std::vector<int> dx(J, 0);
  std::fill(dx.begin() + static_cast<std::ptrdiff_t>(n_healthy), dx.end(), 1);
  ds.cohort = make_cohort(J, B, std::move(raw), std::move(dx));
  return ds;
}

}  // namespace tempo::sim
