#include "tempo/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "tempo/cli/manifest.hpp"
#include "tempo/errors.hpp"
#include "tempo/eval/metrics.hpp"
#include "tempo/eval/report.hpp"
#include "tempo/io/bundle.hpp"
#include "tempo/io/checkpoint.hpp"
#include "tempo/io/cohort_csv.hpp"
#include "tempo/io/files.hpp"
#include "tempo/sim/generator.hpp"
#include "tempo/sim/rng.hpp"
#include "tempo/train/trainer.hpp"

namespace tempo::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

fs::path with_suffix(const fs::path& p, const std::string& suffix) {
  fs::path out = p;
  out += suffix;
  return out;
}

fs::path parent_or_dot(const fs::path& p) {
  const fs::path parent = p.parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

void ensure_parent(const fs::path& p) {
  const fs::path parent = p.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::vector<sim::Dataset> load_all(const fs::path& dir, std::ostream& log) {
  std::vector<sim::Dataset> out;
  for (const fs::path& b : io::list_bundles(dir)) out.push_back(io::read_bundle(b));
  if (out.empty()) throw UsageError("no dataset bundles (ds_*) in " + dir.string());
  fmt::print(log, "loaded {} bundles from {}\n", out.size(), dir.string());
  return out;
}

eval::Predictor predictor_for(const model::TempoModel& m) {
  return [&m](const sim::Cohort& c) {
    model::ForwardOutput out = m.predict(c);
    return eval::Prediction{std::move(out.s), std::move(out.y_hat)};
  };
}

void check_biomarkers(std::size_t model_b, std::size_t data_b, const std::string& what) {
  if (model_b != data_b) {
    throw DimensionError(fmt::format("{}: checkpoint expects B={} but data has B={}", what,
                                     model_b, data_b));
  }
}

}  // namespace

int cmd_generate(const GenerateOptions& o, std::ostream& log) {
  sim::ExperimentConfig cfg;
  cfg.experiment_id = o.experiment_id;
  cfg.n_biomarkers = o.n_biomarkers;
  cfg.n_participants = o.n_participants;
  cfg.healthy_fraction = o.healthy_fraction;
  cfg.validate();
  if (o.n_datasets == 0) throw UsageError("--n-datasets must be at least 1");

  if (fs::exists(o.out) && !fs::is_directory(o.out)) {
    throw UsageError(o.out.string() + " exists and is not a directory");
  }
  if (fs::exists(o.out) && !fs::is_empty(o.out)) {
    if (!o.force) {
      throw UsageError("refusing to write into non-empty directory " + o.out.string() +
                       " (use --force)");
    }
    for (const auto& e : fs::directory_iterator(o.out)) {
      const std::string name = e.path().filename().string();
      if (name.rfind("ds_", 0) == 0 || name == "manifest.json") fs::remove_all(e.path());
    }
  }
  fs::create_directories(o.out);

  Manifest man;
  man.command = "generate";
  man.seed = o.seed;
  man.config = {{"experiment_id", o.experiment_id}, {"n_datasets", o.n_datasets},
                {"n_biomarkers", o.n_biomarkers},   {"n_participants", o.n_participants},
                {"healthy_fraction", o.healthy_fraction}};
  for (std::size_t i = 0; i < o.n_datasets; ++i) {
    cfg.seed = sim::derive_seed(o.seed, i);
    const fs::path dir = o.out / io::bundle_name(i);
    io::write_bundle(dir, sim::generate_dataset(cfg));
    man.outputs.push_back(dir / "data.csv");
    man.outputs.push_back(dir / "truth.json");
  }
  write_manifest(o.out / "manifest.json", man, o.out);
  fmt::print(log, "wrote {} bundles to {}\n", o.n_datasets, o.out.string());
  return kSuccess;
}

int cmd_train(const TrainOptions& o, std::ostream& log) {
  sim::experiment_spec(o.experiment_id);
  if (o.epochs == 0) throw UsageError("--epochs must be at least 1");
  const std::vector<sim::Dataset> train = load_all(o.train_dir, log);
  const std::vector<sim::Dataset> val = load_all(o.val_dir, log);
  for (const auto* set : {&train, &val}) {
    for (const sim::Dataset& ds : *set) {
      if (ds.cohort.n_biomarkers != train.front().cohort.n_biomarkers) {
        throw ConfigError(fmt::format("bundles mix biomarker counts {} and {}",
                                      train.front().cohort.n_biomarkers,
                                      ds.cohort.n_biomarkers));
      }
      if (ds.experiment_id != o.experiment_id) {
        fmt::print(log, "warning: bundle from experiment {} used for experiment {}\n",
                   ds.experiment_id, o.experiment_id);
        break;
      }
    }
  }

  train::TrainConfig tc;
  tc.n_train_datasets = train.size();
  tc.n_val_datasets = val.size();
  tc.epochs = o.epochs;
  tc.seed = o.seed;
  tc.adam.lr = o.lr;
  tc.model.d_model = o.d_model;
  tc.model.n_heads = o.n_heads;
  if (o.target_mode) tc.target_mode = parse_target_mode(*o.target_mode);

  train::FitHooks hooks;
  hooks.on_epoch = [&log, &o](const train::EpochLog& r) {
    fmt::print(log, "epoch {}/{}  train {:.5f}  val {:.5f} (seq {:.5f}, stage {:.5f})\n",
               r.epoch, o.epochs, r.train_loss, r.val_loss, r.val_seq, r.val_stage);
  };
  hooks.on_warning = [&log](const std::string& w) { fmt::print(log, "warning: {}\n", w); };
  const train::TrainResult res = train::fit(tc, train, val, o.experiment_id, hooks);

  ensure_parent(o.out);
  io::save_checkpoint(o.out, res.model, o.experiment_id, res.target_mode);
  const fs::path log_path = o.log.value_or(with_suffix(o.out, ".log.csv"));
  ensure_parent(log_path);
  std::ostringstream csv;
  train::write_log_csv(csv, res.log);
  io::write_file_atomic(log_path, csv.str());

  Manifest man;
  man.command = "train";
  man.seed = o.seed;
  man.config = {{"experiment_id", o.experiment_id},
                {"epochs", o.epochs},
                {"lr", o.lr},
                {"d_model", o.d_model},
                {"n_heads", o.n_heads},
                {"target_mode", to_string(res.target_mode)},
                {"n_train_datasets", train.size()},
                {"n_val_datasets", val.size()}};
  man.inputs = {o.train_dir.string(), o.val_dir.string()};
  man.outputs = {o.out, log_path};
  write_manifest(with_suffix(o.out, ".manifest.json"), man, parent_or_dot(o.out));
  fmt::print(log, "best epoch {} (val loss {:.6f}); checkpoint {}\n", res.best_epoch,
             res.best_val_loss, o.out.string());
  return kSuccess;
}

int cmd_eval(const EvalOptions& o, std::ostream& log) {
  const io::Checkpoint ck = io::load_checkpoint(o.model);
  const std::size_t B = ck.model.config().n_biomarkers;
  const eval::Predictor predict = predictor_for(ck.model);
  const eval::StageRounding rounding =
      o.raw_stages ? eval::StageRounding::kRaw : eval::StageRounding::kRound;

  const std::vector<fs::path> bundles = io::list_bundles(o.data);
  if (bundles.empty()) throw UsageError("no dataset bundles (ds_*) in " + o.data.string());
  std::vector<eval::DatasetMetrics> rows;
  for (const fs::path& dir : bundles) {
    const std::string name = dir.filename().string();
    sim::Dataset ds;
    try {
      ds = io::read_bundle(dir);
    } catch (const std::exception& e) {
      fmt::print(log, "error: {}: {}\n", name, e.what());
      rows.push_back({name, 0.0, 0.0, 0.0, std::string(e.what())});
      continue;
    }
    check_biomarkers(B, ds.cohort.n_biomarkers, name);
    try {
      eval::DatasetMetrics m = eval::evaluate_dataset(predict, ds, ck.target_mode, rounding);
      m.name = name;
      rows.push_back(std::move(m));
    } catch (const std::exception& e) {
      fmt::print(log, "error: {}: {}\n", name, e.what());
      rows.push_back({name, 0.0, 0.0, 0.0, std::string(e.what())});
    }
  }
  const eval::EvalReport report = eval::make_report(std::move(rows));

  ensure_parent(o.out);
  std::ostringstream csv;
  eval::write_report_csv(csv, report);
  io::write_file_atomic(o.out, csv.str());

  auto summary = [](const eval::Summary& s) {
    return ordered_json{{"mean", s.mean}, {"std", s.std}, {"ci95_half_width", s.ci_half_width}};
  };
  ordered_json js;
  js["format_version"] = 1;
  js["experiment_id"] = ck.experiment_id;
  js["n_datasets"] = report.rows.size();
  js["n_failed"] = report.n_failed;
  js["tau"] = summary(report.tau);
  js["staging_mae"] = summary(report.staging_mae);
  js["sequence_mae"] = summary(report.sequence_mae);
  const fs::path summary_path = with_suffix(o.out, ".summary.json");
  io::write_file_atomic(summary_path, js.dump(1) + "\n");

  Manifest man;
  man.command = "eval";
  man.config = {{"stage_rounding", o.raw_stages ? "raw" : "round"}};
  man.inputs = {o.model.string(), o.data.string()};
  man.outputs = {o.out, summary_path};
  write_manifest(with_suffix(o.out, ".manifest.json"), man, parent_or_dot(o.out));

  fmt::print(log, "tau {:.4f} ± {:.4f}  staging MAE {:.4f} ± {:.4f}  sequence MAE {:.4f} ± {:.4f}\n",
             report.tau.mean, report.tau.ci_half_width, report.staging_mae.mean,
             report.staging_mae.ci_half_width, report.sequence_mae.mean,
             report.sequence_mae.ci_half_width);
  return report.n_failed ? kPartialFailure : kSuccess;
}

int cmd_cross_eval(const CrossEvalOptions& o, std::ostream& log) {
  const eval::Metric metric = eval::parse_metric(o.metric);
  if (o.models.size() < o.expected) {
    throw UsageError(fmt::format("cross evaluation needs {} models, got {}", o.expected,
                                 o.models.size()));
  }
  std::vector<io::Checkpoint> checkpoints;
  for (const fs::path& p : o.models) checkpoints.push_back(io::load_checkpoint(p));
  const std::size_t B = checkpoints.front().model.config().n_biomarkers;

  bool partial = false;
  std::vector<eval::CrossSuite> suites;
  for (std::size_t e = 1; e <= o.expected; ++e) {
    const fs::path dir = o.data_root / fmt::format("exp_{}", e);
    if (!fs::is_directory(dir)) throw UsageError("missing test suite " + dir.string());
    eval::CrossSuite suite{fmt::format("Exp {}", e), {}};
    for (const fs::path& b : io::list_bundles(dir)) {
      try {
        suite.datasets.push_back(io::read_bundle(b));
      } catch (const std::exception& ex) {
        fmt::print(log, "error: {}: {}\n", b.string(), ex.what());
        partial = true;
      }
    }
    suites.push_back(std::move(suite));
  }

  std::vector<eval::CrossModel> models;
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const io::Checkpoint& ck = checkpoints[i];
    check_biomarkers(ck.model.config().n_biomarkers, B, o.models[i].string());
    models.push_back({fmt::format("Exp {}", ck.experiment_id), predictor_for(ck.model),
                      ck.target_mode});
  }
  for (const auto& s : suites) {
    if (!s.datasets.empty()) {
      check_biomarkers(B, s.datasets.front().cohort.n_biomarkers, s.label);
    }
  }
  const eval::CrossMatrix m = eval::cross_experiment_matrix(models, suites, metric);
  for (const std::string& f : m.failures) fmt::print(log, "error: {}\n", f);

  ensure_parent(o.out);
  std::ostringstream csv;
  eval::write_matrix_csv(csv, m);
  io::write_file_atomic(o.out, csv.str());

  Manifest man;
  man.command = "cross-eval";
  man.config = {{"metric", eval::to_string(metric)}};
  for (const auto& p : o.models) man.inputs.push_back(p.string());
  man.inputs.push_back(o.data_root.string());
  man.outputs = {o.out};
  write_manifest(with_suffix(o.out, ".manifest.json"), man, parent_or_dot(o.out));
  return partial || !m.complete() ? kPartialFailure : kSuccess;
}

int cmd_infer(const InferOptions& o, std::ostream& log) {
  if (o.models.empty()) throw UsageError("infer needs at least one --model");
  std::vector<io::Checkpoint> checkpoints;
  for (const fs::path& p : o.models) checkpoints.push_back(io::load_checkpoint(p));
  const std::size_t B = checkpoints.front().model.config().n_biomarkers;
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    check_biomarkers(checkpoints[i].model.config().n_biomarkers, B, o.models[i].string());
  }

  io::CohortCsvOptions copts;
  copts.control_label = o.control_label;
  copts.expected_biomarkers = B;
  const io::CohortTable table = io::read_cohort_csv(o.cohort, copts);
  for (const std::string& w : table.warnings) fmt::print(log, "warning: {}\n", w);
  const std::size_t J = table.cohort.n_participants;

  std::vector<std::vector<std::size_t>> orders;
  std::vector<double> timeline(B, 0.0), stages(J, 0.0);
  ordered_json per_model = ordered_json::array();
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    const model::ForwardOutput out = checkpoints[i].model.predict(table.cohort);
    const std::vector<std::size_t> order = eval::order_by_value(out.s);
    const std::vector<double> t = eval::continuous_timeline(out.s);
    std::vector<std::string> names;
    for (std::size_t b : order) names.push_back(table.biomarkers[b]);
    for (std::size_t b = 0; b < B; ++b) timeline[b] += t[b] / static_cast<double>(checkpoints.size());
    for (std::size_t j = 0; j < J; ++j) {
      stages[j] += out.y_hat[j] / static_cast<double>(checkpoints.size());
    }
    per_model.push_back({{"model", o.models[i].string()},
                         {"experiment_id", checkpoints[i].experiment_id},
                         {"scores", out.s},
                         {"ordering", names},
                         {"timeline", t},
                         {"stages", out.y_hat}});
    orders.push_back(order);
  }

  ordered_json orderings = ordered_json::array();
  for (const auto& m : per_model) orderings.push_back(m["ordering"]);
  const eval::GroupStaging groups =
      eval::staging_by_group(stages, table.dx_labels, o.group_order);
  for (const std::string& n : groups.notes) fmt::print(log, "note: {}\n", n);
  ordered_json group_means = ordered_json::object();
  for (const auto& g : groups.groups) group_means[g.label] = g.mean;

  const eval::Consensus c = eval::consensus_ranking(orders);
  ordered_json ci = ordered_json::array();
  for (std::size_t b = 0; b < B; ++b) ci.push_back({c.ci_low[b], c.ci_high[b]});
  std::vector<std::string> consensus_order;
  for (std::size_t b : c.order) consensus_order.push_back(table.biomarkers[b]);

  ordered_json res;
  res["format_version"] = 1;
  res["biomarkers"] = table.biomarkers;
  res["participants"] = table.ids;
  res["orderings"] = std::move(orderings);
  res["timeline"] = timeline;
  res["stages"] = stages;
  res["group_means"] = std::move(group_means);
  res["consensus"] = {{"order", consensus_order}, {"mean", c.mean}, {"std", c.std}, {"ci", ci}};
  res["per_model"] = std::move(per_model);

  ensure_parent(o.out);
  io::write_file_atomic(o.out, res.dump(1) + "\n");
  Manifest man;
  man.command = "infer";
  man.config = {{"control_label", o.control_label ? ordered_json(*o.control_label) : ordered_json(nullptr)},
                {"group_order", o.group_order}};
  for (const auto& p : o.models) man.inputs.push_back(p.string());
  man.inputs.push_back(o.cohort.string());
  man.outputs = {o.out};
  if (o.frequency_out) {
    ensure_parent(*o.frequency_out);
    std::ostringstream csv;
    eval::write_frequency_csv(csv, eval::positional_frequency(orders), table.biomarkers);
    io::write_file_atomic(*o.frequency_out, csv.str());
    man.outputs.push_back(*o.frequency_out);
  }
  write_manifest(with_suffix(o.out, ".manifest.json"), man, parent_or_dot(o.out));
  fmt::print(log, "inferred {} participants with {} model(s)\n", J, checkpoints.size());
  return kSuccess;
}

}  // namespace tempo::cli
