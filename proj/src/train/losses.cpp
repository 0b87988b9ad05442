#include "tempo/train/losses.hpp"

#include <algorithm>
#include <cmath>

#include "tempo/errors.hpp"

namespace tempo::train::inline TEMPO_PRECISION_NS {

using ad::Scalar;
using ad::Tensor;

void LossWeights::validate() const {
  if (!(lambda_seq >= 0.0 && lambda_stage >= 0.0 && seq_direct_weight >= 0.0 &&
        seq_pair_weight >= 0.0)) {
    throw ConfigError("loss weights must be nonnegative");
  }
}

TrainTargets make_targets(const sim::GroundTruth& truth, TargetMode mode) {
  const std::size_t B = truth.xi.size();
  if (B < 2) throw DimensionError("targets need at least 2 biomarkers");
  TrainTargets out;
  out.mode = mode;
  out.key = truth.xi;
  out.y_star = truth.y_star;
  out.t.resize(B);
  if (mode == TargetMode::kRank) {
    for (std::size_t b = 0; b < B; ++b) {
      out.t[b] = (truth.xi[b] - 1.0) / static_cast<double>(B - 1);
    }
  } else {
    const auto [lo, hi] = std::minmax_element(truth.xi.begin(), truth.xi.end());
    const double range = *hi - *lo;
    for (std::size_t b = 0; b < B; ++b) {
      out.t[b] = range > 0.0 ? (truth.xi[b] - *lo) / range : 0.0;
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> valid_pairs(std::span<const double> key) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < key.size(); ++a) {
    for (std::size_t b = a + 1; b < key.size(); ++b) {
      if (key[a] != key[b]) out.emplace_back(a, b);
    }
  }
  return out;
}

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": length mismatch (" + std::to_string(a) +
                         " vs " + std::to_string(b) + ")");
  }
}

Tensor column(std::span<const double> v) {
  Tensor t({v.size(), 1});
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = static_cast<Scalar>(v[i]);
  return t;
}

}  // namespace

double direct_loss(std::span<const double> s, std::span<const double> t) {
  check_lengths(s.size(), t.size(), "direct loss");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += (s[i] - t[i]) * (s[i] - t[i]);
  return acc / static_cast<double>(s.size());
}

double pair_loss_discrete(double s_a, double s_b, double r_a, double r_b) {
  if (r_a == r_b) throw std::invalid_argument("invalid pair: both biomarkers share rank");
  const double z = s_b - s_a;
  // -log sigmoid(z) when y = 1, -log(1 - sigmoid(z)) when y = 0.
  return r_a < r_b ? softplus(-z) : softplus(z);
}

double pair_loss_continuous(double s_a, double s_b, double t_a, double t_b) {
  const double d = (s_b - s_a) - (t_b - t_a);
  return d * d;
}

double stage_loss(std::span<const double> y_hat, std::span<const int> y_star,
                  std::size_t n_biomarkers) {
  check_lengths(y_hat.size(), y_star.size(), "stage loss");
  double acc = 0.0;
  for (std::size_t j = 0; j < y_hat.size(); ++j) {
    const double e = y_hat[j] - y_star[j];
    acc += e * e;
  }
  const double B = static_cast<double>(n_biomarkers);
  return acc / static_cast<double>(y_hat.size()) / (B * B);
}

Var loss_direct(Var s, std::span<const double> t) {
  check_lengths(s.value().numel(), t.size(), "direct loss");
  const Var col = ad::reshape(s, {t.size(), 1});
  return ad::mean(ad::square(ad::sub(col, s.tape()->constant(column(t)))));
}

Var loss_pair_discrete(Var s, std::size_t a, std::size_t b, double r_a, double r_b) {
  if (r_a == r_b) throw std::invalid_argument("invalid pair: both biomarkers share rank");
  const std::size_t ia[] = {a};
  const std::size_t ib[] = {b};
  const Var z = ad::sub(ad::gather(s, ib), ad::gather(s, ia));
  return ad::sum(ad::softplus(r_a < r_b ? ad::scale(z, Scalar{-1}) : z));
}

Var loss_pair_continuous(Var s, std::size_t a, std::size_t b, double t_a, double t_b) {
  const std::size_t ia[] = {a};
  const std::size_t ib[] = {b};
  const Var z = ad::sub(ad::gather(s, ib), ad::gather(s, ia));
  return ad::sum(ad::square(ad::add_scalar(z, static_cast<Scalar>(-(t_b - t_a)))));
}

Var loss_stage(Var y_hat, std::span<const int> y_star, std::size_t n_biomarkers) {
  check_lengths(y_hat.value().numel(), y_star.size(), "stage loss");
  std::vector<double> target(y_star.begin(), y_star.end());
  const Var col = ad::reshape(y_hat, {target.size(), 1});
  const double B = static_cast<double>(n_biomarkers);
  return ad::scale(ad::mean(ad::square(ad::sub(col, y_hat.tape()->constant(column(target))))),
                   static_cast<Scalar>(1.0 / (B * B)));
}

LossVars total_loss(const model::ForwardVars& out, const TrainTargets& targets,
                    const LossWeights& w,
                    std::optional<std::pair<std::size_t, std::size_t>> pair) {
  const std::size_t B = targets.t.size();
  Var seq = ad::scale(loss_direct(out.s, targets.t), static_cast<Scalar>(w.seq_direct_weight));
  if (pair) {
    const auto [a, b] = *pair;
    const Var lp = targets.mode == TargetMode::kRank
                       ? loss_pair_discrete(out.s, a, b, targets.key[a], targets.key[b])
                       : loss_pair_continuous(out.s, a, b, targets.t[a], targets.t[b]);
    seq = ad::add(seq, ad::scale(lp, static_cast<Scalar>(w.seq_pair_weight)));
  }
  const Var stage = loss_stage(out.y_hat, targets.y_star, B);
  const Var total = ad::add(ad::scale(seq, static_cast<Scalar>(w.lambda_seq)),
                            ad::scale(stage, static_cast<Scalar>(w.lambda_stage)));
  return {total, seq, stage};
}

LossValues expected_loss(const model::ForwardOutput& out, const TrainTargets& targets,
                         const LossWeights& w) {
  const auto pairs = valid_pairs(targets.key);
  double pair_mean = 0.0;
  for (const auto& [a, b] : pairs) {
    pair_mean += targets.mode == TargetMode::kRank
                     ? pair_loss_discrete(out.s[a], out.s[b], targets.key[a], targets.key[b])
                     : pair_loss_continuous(out.s[a], out.s[b], targets.t[a], targets.t[b]);
  }
  if (!pairs.empty()) pair_mean /= static_cast<double>(pairs.size());
  LossValues v;
  v.seq = w.seq_direct_weight * direct_loss(out.s, targets.t) +
          (pairs.empty() ? 0.0 : w.seq_pair_weight * pair_mean);
  v.stage = stage_loss(out.y_hat, targets.y_star, targets.t.size());
  v.total = w.lambda_seq * v.seq + w.lambda_stage * v.stage;
  return v;
}

}  // namespace tempo::train
