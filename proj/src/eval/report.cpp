#include "tempo/eval/report.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "tempo/errors.hpp"

namespace tempo::eval {

DatasetMetrics evaluate_dataset(const Predictor& predict, const sim::Dataset& ds,
                                TargetMode mode, StageRounding rounding) {
  DatasetMetrics m;
  const Prediction p = predict(ds.cohort);
  const std::size_t B = ds.cohort.n_biomarkers;
  if (p.s.size() != B || p.y_hat.size() != ds.cohort.n_participants) {
    throw DimensionError("prediction shape does not match the cohort");
  }
  m.tau = normalized_kendall_tau(order_by_value(p.s), order_by_value(ds.truth.xi));
  m.staging_mae = staging_mae(p.y_hat, ds.truth.y_star, B, rounding);
  m.sequence_mae = sequence_mae(p.s, ds.truth.xi, mode);
  return m;
}

EvalReport make_report(std::vector<DatasetMetrics> rows) {
  EvalReport r;
  std::vector<double> tau, stage, seq;
  for (const DatasetMetrics& m : rows) {
    if (m.error) {
      ++r.n_failed;
      continue;
    }
    tau.push_back(m.tau);
    stage.push_back(m.staging_mae);
    seq.push_back(m.sequence_mae);
  }
  r.tau = summarize(tau);
  r.staging_mae = summarize(stage);
  r.sequence_mae = summarize(seq);
  r.rows = std::move(rows);
  return r;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  return std::isfinite(v) ? fmt::format("{:.9g}", v) : std::string("NA");
}

}  // namespace

void write_report_csv(std::ostream& os, const EvalReport& report) {
  os << "dataset,status,tau,staging_mae,sequence_mae,tau_std,tau_ci,staging_mae_std,"
        "staging_mae_ci,sequence_mae_std,sequence_mae_ci\n";
  for (const DatasetMetrics& m : report.rows) {
    if (m.error) {
      os << csv_field(m.name) << ',' << csv_field("error: " + *m.error) << ",,,,,,,,,\n";
    } else {
      os << csv_field(m.name) << ",ok," << num(m.tau) << ',' << num(m.staging_mae) << ','
         << num(m.sequence_mae) << ",,,,,,\n";
    }
  }
  const auto& t = report.tau;
  const auto& st = report.staging_mae;
  const auto& sq = report.sequence_mae;
  os << "mean," << (report.n_failed ? "partial" : "ok") << ',' << num(t.mean) << ','
     << num(st.mean) << ',' << num(sq.mean) << ',' << num(t.std) << ','
     << num(t.ci_half_width) << ',' << num(st.std) << ',' << num(st.ci_half_width) << ','
     << num(sq.std) << ',' << num(sq.ci_half_width) << '\n';
}

Metric parse_metric(const std::string& s) {
  if (s == "tau") return Metric::kTau;
  if (s == "stage_mae") return Metric::kStagingMae;
  if (s == "seq_mae") return Metric::kSequenceMae;
  throw std::invalid_argument("unknown metric '" + s + "' (expected tau, stage_mae or seq_mae)");
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::kTau: return "tau";
    case Metric::kStagingMae: return "stage_mae";
    case Metric::kSequenceMae: return "seq_mae";
  }
  return "?";
}

double metric_of(const DatasetMetrics& m, Metric which) {
  switch (which) {
    case Metric::kTau: return m.tau;
    case Metric::kStagingMae: return m.staging_mae;
    case Metric::kSequenceMae: return m.sequence_mae;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

double mean_finite(const std::vector<double>& v) {
  double acc = 0.0;
  std::size_t n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      acc += x;
      ++n;
    }
  }
  return n ? acc / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

CrossMatrix cross_experiment_matrix(const std::vector<CrossModel>& models,
                                    const std::vector<CrossSuite>& suites, Metric metric) {
  if (models.empty() || suites.empty()) {
    throw std::invalid_argument("cross evaluation needs at least one model and one suite");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CrossMatrix cm;
  for (const auto& s : suites) cm.col_labels.push_back(s.label);
  for (const CrossModel& model : models) {
    cm.row_labels.push_back(model.label);
    std::vector<double> row;
    for (const CrossSuite& suite : suites) {
      double acc = 0.0;
      bool ok = !suite.datasets.empty();
      if (!ok) cm.failures.push_back(model.label + " on " + suite.label + ": empty suite");
      for (const sim::Dataset& ds : suite.datasets) {
        try {
          acc += metric_of(evaluate_dataset(model.predict, ds, model.mode), metric);
        } catch (const std::exception& e) {
          cm.failures.push_back(model.label + " on " + suite.label + ": " + e.what());
          ok = false;
          break;
        }
      }
      row.push_back(ok ? acc / static_cast<double>(suite.datasets.size()) : nan);
    }
    cm.values.push_back(std::move(row));
  }
  for (const auto& row : cm.values) cm.row_means.push_back(mean_finite(row));
  for (std::size_t j = 0; j < suites.size(); ++j) {
    std::vector<double> col;
    for (const auto& row : cm.values) col.push_back(row[j]);
    cm.col_means.push_back(mean_finite(col));
  }
  return cm;
}

void write_matrix_csv(std::ostream& os, const CrossMatrix& m) {
  os << "model";
  for (const auto& c : m.col_labels) os << ',' << csv_field(c);
  os << ",RowMean\n";
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    os << csv_field(m.row_labels[i]);
    for (double v : m.values[i]) os << ',' << num(v);
    os << ',' << num(m.row_means[i]) << '\n';
  }
  os << "ColMean";
  for (double v : m.col_means) os << ',' << num(v);
  os << ",\n";
}

}  // namespace tempo::eval
