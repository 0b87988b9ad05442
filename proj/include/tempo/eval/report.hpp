#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tempo/eval/metrics.hpp"
#include "tempo/sim/cohort.hpp"
#include "tempo/target_mode.hpp"

namespace tempo::eval {

// What a model contributes to evaluation: scores s (length B) and predicted
// stages (length J).
struct Prediction {
  std::vector<double> s;
  std::vector<double> y_hat;
};

using Predictor = std::function<Prediction(const sim::Cohort&)>;

struct DatasetMetrics {
  std::string name;
  double tau = 0.0;
  double staging_mae = 0.0;
  double sequence_mae = 0.0;
  std::optional<std::string> error;
};

struct EvalReport {
  std::vector<DatasetMetrics> rows;
  Summary tau, staging_mae, sequence_mae;  // over successful rows
  std::size_t n_failed = 0;
};

DatasetMetrics evaluate_dataset(const Predictor& predict, const sim::Dataset& ds,
                                TargetMode mode, StageRounding rounding = StageRounding::kRound);

EvalReport make_report(std::vector<DatasetMetrics> rows);

// One row per dataset, then a `mean` row carrying std and CI columns.
void write_report_csv(std::ostream& os, const EvalReport& report);

enum class Metric { kTau, kStagingMae, kSequenceMae };
Metric parse_metric(const std::string& s);
std::string to_string(Metric m);
double metric_of(const DatasetMetrics& m, Metric which);

struct CrossModel {
  std::string label;
  Predictor predict;
  TargetMode mode = TargetMode::kRank;
};

struct CrossSuite {
  std::string label;
  std::vector<sim::Dataset> datasets;
};

// Entry (i, j): mean metric of model i over suite j; NaN marks a cell
// where any dataset failed. Means skip NaN cells.
struct CrossMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> values;
  std::vector<double> row_means;
  std::vector<double> col_means;
  std::vector<std::string> failures;

  bool complete() const { return failures.empty(); }
};

CrossMatrix cross_experiment_matrix(const std::vector<CrossModel>& models,
                                    const std::vector<CrossSuite>& suites, Metric metric);

// Header, one row per model with RowMean, final ColMean row. Failed cells
// are written as NA.
void write_matrix_csv(std::ostream& os, const CrossMatrix& m);

}  // namespace tempo::eval
