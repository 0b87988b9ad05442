#include <exception>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "tempo/cli/commands.hpp"
#include "tempo/errors.hpp"

#ifndef TEMPO_VERSION
#define TEMPO_VERSION "0.0.0"
#endif

namespace tempo::cli {

int run(int argc, const char* const* argv) {
  CLI::App app{"Simulation, training and evaluation of disease-progression sequencing models",
               "tempo"};
  app.set_version_flag("--version", TEMPO_VERSION);
  app.set_config("--config", "", "Key/value configuration file; flags take precedence");
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Simulate dataset bundles for one experiment");
  g->add_option("--exp", gen.experiment_id, "Experiment 1..9")->required()->check(CLI::Range(1, 9));
  g->add_option("--n-datasets", gen.n_datasets, "Number of bundles")->check(CLI::PositiveNumber);
  g->add_option("--b", gen.n_biomarkers, "Biomarkers")->check(CLI::Range(2, 100000));
  g->add_option("--j", gen.n_participants, "Participants")->check(CLI::Range(2, 100000000));
  g->add_option("--healthy-frac", gen.healthy_fraction, "Fraction of healthy participants");
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_flag("--force", gen.force, "Replace bundles in a non-empty output directory");

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a model on generated bundles");
  t->add_option("--exp", tr.experiment_id, "Experiment 1..9")->required()->check(CLI::Range(1, 9));
  t->add_option("--train-dir", tr.train_dir, "Training bundles")->required()->check(CLI::ExistingDirectory);
  t->add_option("--val-dir", tr.val_dir, "Validation bundles")->required()->check(CLI::ExistingDirectory);
  t->add_option("--epochs", tr.epochs, "Passes over the training bundles")->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.seed, "Master seed");
  t->add_option("--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  t->add_option("--d-model", tr.d_model, "Embedding width")->check(CLI::PositiveNumber);
  t->add_option("--n-heads", tr.n_heads, "Attention heads")->check(CLI::PositiveNumber);
  t->add_option("--target-mode", tr.target_mode, "rank or time (default from experiment)")
      ->check(CLI::IsMember({"rank", "time"}));
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--log", tr.log, "Training log CSV (default <out>.log.csv)");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on test bundles");
  e->add_option("--model", ev.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ev.data, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--out", ev.out, "Report CSV")->required();
  e->add_flag("--raw-stages", ev.raw_stages, "Score unrounded stage predictions");

  CrossEvalOptions cx;
  auto* c = app.add_subcommand("cross-eval", "Evaluate every model on every experiment suite");
  c->add_option("--models", cx.models, "Checkpoints, one per trained experiment")
      ->required()->check(CLI::ExistingFile);
  c->add_option("--data-root", cx.data_root, "Directory holding exp_1 .. exp_9")
      ->required()->check(CLI::ExistingDirectory);
  c->add_option("--metric", cx.metric, "tau, stage_mae or seq_mae")
      ->check(CLI::IsMember({"tau", "stage_mae", "seq_mae"}));
  c->add_option("--out", cx.out, "Matrix CSV")->required();

  InferOptions inf;
  auto* in = app.add_subcommand("infer", "Order biomarkers and stage participants of a cohort");
  in->add_option("--model,--models", inf.models, "One or more checkpoints")
      ->required()->check(CLI::ExistingFile);
  in->add_option("--cohort", inf.cohort, "Cohort CSV: id,dx,<biomarkers>")
      ->required()->check(CLI::ExistingFile);
  in->add_option("--control-label", inf.control_label, "dx value of the control group");
  in->add_option("--group-order", inf.group_order, "Diagnosis groups to report first, in order")
      ->delimiter(',');
  in->add_option("--out", inf.out, "Results JSON")->required();
  in->add_option("--frequency-out", inf.frequency_out, "Positional frequency matrix CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    if (*g) return cmd_generate(gen, std::cerr);
    if (*t) return cmd_train(tr, std::cerr);
    if (*e) return cmd_eval(ev, std::cerr);
    if (*c) return cmd_cross_eval(cx, std::cerr);
    if (*in) return cmd_infer(inf, std::cerr);
  } catch (const UsageError& err) {
    fmt::print(std::cerr, "error: {}\n", err.what());
    return kUsageError;
  } catch (const ConfigError& err) {
    fmt::print(std::cerr, "error: {}\n", err.what());
    return kUsageError;
  } catch (const DimensionError& err) {
    fmt::print(std::cerr, "error: {}\n", err.what());
    return kUsageError;
  } catch (const FormatError& err) {
    fmt::print(std::cerr, "error: {}\n", err.what());
    return kUsageError;
  } catch (const std::exception& err) {
    fmt::print(std::cerr, "error: {}\n", err.what());
    return kPartialFailure;
  }
  return kUsageError;
}

}  // namespace tempo::cli
