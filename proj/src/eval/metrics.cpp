#include "tempo/eval/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "tempo/errors.hpp"

namespace tempo::eval {

std::vector<std::size_t> order_by_value(std::span<const double> values) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  return idx;
}

namespace {

std::uint64_t merge_count(std::vector<std::size_t>& v, std::vector<std::size_t>& tmp,
                          std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t n = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      n += mid - i;
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + lo, tmp.begin() + hi, v.begin() + lo);
  return n;
}

}  // namespace

std::uint64_t count_inversions(std::vector<std::size_t> seq) {
  std::vector<std::size_t> tmp(seq.size());
  return merge_count(seq, tmp, 0, seq.size());
}

double normalized_kendall_tau(std::span<const std::size_t> pred_order,
                              std::span<const std::size_t> true_order) {
  const std::size_t n = true_order.size();
  if (pred_order.size() != n) {
    throw std::invalid_argument("kendall tau: orderings have different lengths");
  }
  // Position of every item in the true order; items are labels 0..n-1.
  std::vector<std::size_t> pos(n, n);
  for (std::size_t p = 0; p < n; ++p) {
    if (true_order[p] >= n || pos[true_order[p]] != n) {
      throw std::invalid_argument("kendall tau: true order is not a permutation");
    }
    pos[true_order[p]] = p;
  }
  std::vector<std::size_t> seq(n);
  std::vector<bool> seen(n, false);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t item = pred_order[p];
    if (item >= n || seen[item]) {
      throw std::invalid_argument("kendall tau: orderings are not permutations of each other");
    }
    seen[item] = true;
    seq[p] = pos[item];
  }
  if (n < 2) return 0.0;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<double>(count_inversions(std::move(seq))) / pairs;
}

double staging_mae(std::span<const double> y_hat, std::span<const int> y_star,
                   std::size_t n_biomarkers, StageRounding mode) {
  if (y_hat.size() != y_star.size()) throw DimensionError("staging MAE: length mismatch");
  if (y_hat.empty()) throw DimensionError("staging MAE: no participants");
  const double B = static_cast<double>(n_biomarkers);
  double acc = 0.0;
  for (std::size_t j = 0; j < y_hat.size(); ++j) {
    double y = y_hat[j];
    if (mode == StageRounding::kRound) y = std::round(std::clamp(y, 0.0, B));
    acc += std::abs(y - y_star[j]);
  }
  return acc / static_cast<double>(y_hat.size());
}

double sequence_mae(std::span<const double> s, std::span<const double> xi, TargetMode mode) {
  if (s.size() != xi.size()) throw DimensionError("sequence MAE: length mismatch");
  if (s.size() < 2) throw DimensionError("sequence MAE: need at least 2 biomarkers");
  double lo = 1.0, range = static_cast<double>(s.size() - 1);
  if (mode == TargetMode::kTime) {
    const auto [mn, mx] = std::minmax_element(xi.begin(), xi.end());
    lo = *mn;
    range = *mx - *mn;
  }
  double acc = 0.0;
  for (std::size_t b = 0; b < s.size(); ++b) acc += std::abs(s[b] * range + lo - xi[b]);
  return acc / static_cast<double>(s.size());
}

std::vector<double> continuous_timeline(std::span<const double> s) {
  if (s.size() < 2) throw DimensionError("timeline needs at least 2 scores");
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  const double range = *mx - *mn;
  if (!(range > 0.0)) throw NumericError("degenerate timeline: all scores are equal");
  std::vector<double> out(s.size());
  for (std::size_t b = 0; b < s.size(); ++b) out[b] = (s[b] - *mn) / range;
  return out;
}

GroupStaging staging_by_group(std::span<const double> y_hat,
                              std::span<const std::string> labels,
                              std::span<const std::string> expected) {
  if (y_hat.size() != labels.size()) throw DimensionError("group staging: length mismatch");
  std::vector<std::string> names(expected.begin(), expected.end());
  for (const std::string& l : labels) {
    if (std::find(names.begin(), names.end(), l) == names.end()) names.push_back(l);
  }
  GroupStaging out;
  for (const std::string& name : names) {
    GroupMean g{name, 0.0, 0};
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] == name) {
        g.mean += y_hat[j];
        ++g.count;
      }
    }
    if (g.count == 0) {
      out.notes.push_back("group '" + name + "' has no participants");
      continue;
    }
    g.mean /= static_cast<double>(g.count);
    out.groups.push_back(g);
  }
  return out;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double v = 0.0;
    for (double x : values) v += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(v / static_cast<double>(s.n - 1));
  }
  s.ci_half_width = 1.96 * s.std / std::sqrt(static_cast<double>(s.n));
  return s;
}

Consensus consensus_from_ranks(const std::vector<std::vector<double>>& ranks) {
  if (ranks.empty()) throw std::invalid_argument("consensus needs at least one ordering");
  const std::size_t B = ranks.front().size();
  for (const auto& r : ranks) {
    if (r.size() != B) throw DimensionError("consensus: orderings have different lengths");
  }
  const std::size_t n = ranks.size();
  double t = 0.0;
  if (n > 1) {
    boost::math::students_t dist(static_cast<double>(n - 1));
    t = boost::math::quantile(dist, 0.975);
  }
  Consensus c;
  c.mean.resize(B);
  c.std.resize(B);
  c.ci_low.resize(B);
  c.ci_high.resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> col(n);
    for (std::size_t m = 0; m < n; ++m) col[m] = ranks[m][b];
    const Summary s = summarize(col);
    const double half = n > 1 ? t * s.std / std::sqrt(static_cast<double>(n)) : 0.0;
    c.mean[b] = s.mean;
    c.std[b] = s.std;
    c.ci_low[b] = s.mean - half;
    c.ci_high[b] = s.mean + half;
  }
  c.order.resize(B);
  std::iota(c.order.begin(), c.order.end(), std::size_t{0});
  std::stable_sort(c.order.begin(), c.order.end(), [&](std::size_t a, std::size_t b) {
    if (c.mean[a] != c.mean[b]) return c.mean[a] < c.mean[b];
    return c.std[a] < c.std[b];
  });
  return c;
}

namespace {

std::vector<double> ranks_of(const std::vector<std::size_t>& order, std::size_t B) {
  if (order.size() != B) throw DimensionError("ordering has the wrong length");
  std::vector<double> r(B, 0.0);
  for (std::size_t p = 0; p < B; ++p) {
    if (order[p] >= B || r[order[p]] != 0.0) {
      throw std::invalid_argument("ordering is not a permutation");
    }
    r[order[p]] = static_cast<double>(p + 1);
  }
  return r;
}

}  // namespace

Consensus consensus_ranking(const std::vector<std::vector<std::size_t>>& orderings) {
  if (orderings.empty()) throw std::invalid_argument("consensus needs at least one ordering");
  std::vector<std::vector<double>> ranks;
  for (const auto& o : orderings) ranks.push_back(ranks_of(o, orderings.front().size()));
  return consensus_from_ranks(ranks);
}

std::vector<std::vector<double>> positional_frequency(
    const std::vector<std::vector<std::size_t>>& orderings) {
  if (orderings.empty()) return {};
  const std::size_t B = orderings.front().size();
  std::vector<std::vector<double>> freq(B, std::vector<double>(B, 0.0));
  for (const auto& o : orderings) {
    const std::vector<double> r = ranks_of(o, B);
    for (std::size_t b = 0; b < B; ++b) {
      freq[b][static_cast<std::size_t>(r[b]) - 1] += 1.0 / static_cast<double>(orderings.size());
    }
  }
  return freq;
}

void write_frequency_csv(std::ostream& os, const std::vector<std::vector<double>>& freq,
                         std::span<const std::string> names) {
  os << "biomarker";
  for (std::size_t p = 0; p < freq.size(); ++p) os << ",pos_" << (p + 1);
  os << '\n';
  for (std::size_t b = 0; b < freq.size(); ++b) {
    os << (b < names.size() ? names[b] : fmt::format("b_{:03}", b + 1));
    for (double f : freq[b]) os << ',' << fmt::format("{:.6g}", f);
    os << '\n';
  }
}

}  // namespace tempo::eval
