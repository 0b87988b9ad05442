#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tempo::sim {

// SplitMix64 finalizer over (seed, index); used to derive independent seeds
// for datasets and for the named streams inside one dataset.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// Named substreams of one dataset. Changing the routing of one stream (for
// example the stage prior) leaves every other stream's draws untouched.
enum class Stream : std::uint64_t {
  kParams = 1,
  kEventTimes = 2,
  kStages = 3,
  kMeasurements = 4,
  kFamilyDelta = 5,
  kEventNoise = 6,
};

// Portable random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; every variate below is derived from it
// with explicitly written algorithms so results do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, Stream stream)
      : engine_(derive_seed(seed, static_cast<std::uint64_t>(stream))) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  // Marsaglia polar method.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential(double scale = 1.0);
  // Marsaglia-Tsang; shape < 1 uses the U^(1/shape) boost.
  double gamma(double shape, double scale = 1.0);
  double beta(double a, double b);
  double logistic(double loc, double scale);
  double cauchy(double loc, double scale);
  // Lomax (Pareto II) with unit scale: support [0, inf).
  double pareto(double shape);
  double weibull(double shape);
  double triangular(double left, double mode, double right);

  std::vector<double> dirichlet(std::span<const double> alpha);
  // Index drawn with probability proportional to weights.
  std::size_t categorical(std::span<const double> weights);
  // Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace tempo::sim
