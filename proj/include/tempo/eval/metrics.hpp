#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tempo/target_mode.hpp"

namespace tempo::eval {

// Biomarker indices sorted by ascending value; ties keep index order.
std::vector<std::size_t> order_by_value(std::span<const double> values);

// Inversions of `seq` counted by merge sort in O(n log n).
std::uint64_t count_inversions(std::vector<std::size_t> seq);

// Discordant pairs between two orderings of the same items over C(n, 2).
// Throws std::invalid_argument if they are not permutations of each other.
double normalized_kendall_tau(std::span<const std::size_t> pred_order,
                              std::span<const std::size_t> true_order);

// Clamp to [0, B] then round (kRound), or use the raw predictions (kRaw).
enum class StageRounding { kRound, kRaw };

double staging_mae(std::span<const double> y_hat, std::span<const int> y_star,
                   std::size_t n_biomarkers, StageRounding mode = StageRounding::kRound);

// Maps scores back to event-time units by inverting the training
// normalization, then takes the mean absolute error against xi.
double sequence_mae(std::span<const double> s, std::span<const double> xi, TargetMode mode);

// (s - min s) / (max s - min s). Throws NumericError when all scores are equal.
std::vector<double> continuous_timeline(std::span<const double> s);

struct GroupMean {
  std::string label;
  double mean = 0.0;
  std::size_t count = 0;
};

struct GroupStaging {
  std::vector<GroupMean> groups;
  std::vector<std::string> notes;
};

// Mean predicted stage per label. Groups listed in `expected` come first in
// that order; an expected group with no members is omitted with a note.
// Remaining labels follow in order of first appearance.
GroupStaging staging_by_group(std::span<const double> y_hat,
                              std::span<const std::string> labels,
                              std::span<const std::string> expected = {});

// Mean, sample standard deviation and 95% normal-approximation half-width
// 1.96 * std / sqrt(n).
struct Summary {
  double mean = 0.0;
  double std = 0.0;
  double ci_half_width = 0.0;
  std::size_t n = 0;
};

Summary summarize(std::span<const double> values);

struct Consensus {
  std::vector<double> mean;  // mean rank position (1-based) per biomarker
  std::vector<double> std;   // sample standard deviation
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  std::vector<std::size_t> order;  // biomarker indices, earliest first
};

// ranks[m][b]: 1-based position of biomarker b in model m's ordering. The
// 95% interval uses Student's t with n - 1 degrees of freedom. Ties in mean
// rank are broken by lower std, then by index.
Consensus consensus_from_ranks(const std::vector<std::vector<double>>& ranks);

// orderings[m]: biomarker indices in model m's order, earliest first.
Consensus consensus_ranking(const std::vector<std::vector<std::size_t>>& orderings);

// freq[b][p]: fraction of orderings that place biomarker b at position p.
std::vector<std::vector<double>> positional_frequency(
    const std::vector<std::vector<std::size_t>>& orderings);

void write_frequency_csv(std::ostream& os, const std::vector<std::vector<double>>& freq,
                         std::span<const std::string> names);

}  // namespace tempo::eval
