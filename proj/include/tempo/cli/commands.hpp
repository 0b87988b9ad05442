#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tempo::cli {

enum ExitCode : int { kSuccess = 0, kPartialFailure = 1, kUsageError = 2 };

// Raised for invalid invocations that parse but cannot run.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerateOptions {
  int experiment_id = 1;
  std::size_t n_datasets = 50;
  std::size_t n_biomarkers = 12;
  std::size_t n_participants = 200;
  double healthy_fraction = 0.21;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  bool force = false;
};

struct TrainOptions {
  int experiment_id = 1;
  std::filesystem::path train_dir;
  std::filesystem::path val_dir;
  std::size_t epochs = 25;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::optional<std::string> target_mode;
  std::filesystem::path out;
  std::optional<std::filesystem::path> log;
};

struct EvalOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::filesystem::path out;
  bool raw_stages = false;
};

struct CrossEvalOptions {
  std::vector<std::filesystem::path> models;
  std::filesystem::path data_root;
  std::string metric = "tau";
  std::filesystem::path out;
  std::size_t expected = 9;
};

struct InferOptions {
  std::vector<std::filesystem::path> models;
  std::filesystem::path cohort;
  std::optional<std::string> control_label;
  std::vector<std::string> group_order;
  std::filesystem::path out;
  std::optional<std::filesystem::path> frequency_out;
};

// Each returns an ExitCode; progress and warnings go to `log`.
int cmd_generate(const GenerateOptions& o, std::ostream& log);
int cmd_train(const TrainOptions& o, std::ostream& log);
int cmd_eval(const EvalOptions& o, std::ostream& log);
int cmd_cross_eval(const CrossEvalOptions& o, std::ostream& log);
int cmd_infer(const InferOptions& o, std::ostream& log);

// Parses argv and dispatches to a subcommand.
int run(int argc, const char* const* argv);

}  // namespace tempo::cli
