#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <unistd.h>

#include "gradcheck.hpp"
#include "tempo/cli/commands.hpp"
#include "tempo/eval/metrics.hpp"
#include "tempo/eval/report.hpp"
#include "tempo/io/files.hpp"
#include "tempo/sim/generator.hpp"
#include "tempo/train/losses.hpp"
#include "tempo/train/trainer.hpp"

using namespace tempo;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradTol = 1e-3;
constexpr double kGradStep = 1e-3;
constexpr double kGradBudget = 60.0;
constexpr double kTauBudget = 10.0;
constexpr double kFreqTol = 0.015;
constexpr double kStageMeanRel = 0.02;
constexpr double kShiftTol = 1e-9;
constexpr double kGenBudget = 60.0;
constexpr double kExp3Tau = 0.15;
constexpr double kExp3Mae = 1.5;
constexpr double kExp8Tau = 0.25;
constexpr double kDeskBudget = 30.0 * 60.0;
constexpr double kPermTol = 1e-5;
constexpr double kLn2Tol = 1e-9;

constexpr std::size_t kDeskTrain = 100;
constexpr std::size_t kDeskVal = 10;
constexpr std::size_t kDeskTest = 10;
constexpr std::size_t kDeskEpochs = 25;
constexpr std::uint64_t kDeskSeed = 11;
constexpr std::uint64_t kTestSeedBase = 900000;

int n_failed = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  if (!ok) ++n_failed;
  fmt::print("AC{:<2} {}  {}: {}\n", id, ok ? "PASS" : "FAIL", what, detail);
  std::cout.flush();
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

sim::ExperimentConfig desk_exp(int id, std::uint64_t seed = 0) {
  sim::ExperimentConfig c;
  c.experiment_id = id;
  c.seed = seed;
  c.n_biomarkers = 12;
  c.n_participants = 200;
  return c;
}

std::vector<sim::Dataset> test_suite(int id) {
  std::vector<sim::Dataset> out;
  for (std::size_t i = 0; i < kDeskTest; ++i) out.push_back(sim::generate_dataset(desk_exp(id, kTestSeedBase + i)));
  return out;
}

eval::Predictor predictor_of(const model::TempoModel& m) {
  return [&m](const sim::Cohort& c) {
    auto o = m.predict(c);
    return eval::Prediction{o.s, o.y_hat};
  };
}

eval::EvalReport evaluate(const eval::Predictor& p, const std::vector<sim::Dataset>& suite,
                          TargetMode mode) {
  std::vector<eval::DatasetMetrics> rows;
  for (const auto& ds : suite) rows.push_back(eval::evaluate_dataset(p, ds, mode));
  return eval::make_report(rows);
}

struct DeskRun {
  train::TrainResult result;
  double seconds = 0.0;
};

DeskRun desk_train(int id) {
  train::TrainConfig tc;
  tc.n_train_datasets = kDeskTrain;
  tc.n_val_datasets = kDeskVal;
  tc.epochs = kDeskEpochs;
  tc.seed = kDeskSeed;
  Stopwatch sw;
  train::TrainResult r = train::fit(tc, desk_exp(id));
  return {std::move(r), sw.seconds()};
}

std::uint64_t brute_discordant(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> pa(a.size()), pb(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[a[i]] = i;
    pb[b[i]] = i;
  }
  std::uint64_t d = 0;
  for (std::size_t x = 0; x < a.size(); ++x) {
    for (std::size_t y = x + 1; y < a.size(); ++y) {
      if ((pa[x] < pa[y]) != (pb[x] < pb[y])) ++d;
    }
  }
  return d;
}

void ac1() {
  Stopwatch sw;
  const auto r = testing::model_gradcheck(2024, 4, 8, 16, kGradStep);
  const double t = sw.seconds();
  report(1, r.max_rel_error < kGradTol && t < kGradBudget, "gradient check",
         fmt::format("{} parameters in {} tensors, max rel error {:.2e} (tol {:.0e}), "
                     "{} near-kink elements, {:.1f}s",
                     r.n_parameters, r.tensors.size(), r.max_rel_error, kGradTol, r.n_kink, t));
}

void ac2() {
  Stopwatch sw;
  sim::Rng rng(7);
  std::vector<std::size_t> sizes{2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 100};
  std::size_t mismatches = 0, pairs = 0;
  for (std::size_t B : sizes) {
    for (int i = 0; i < 1000; ++i) {
      const auto a = rng.permutation(B);
      const auto b = rng.permutation(B);
      const double fast = eval::normalized_kendall_tau(a, b);
      const double brute =
          static_cast<double>(brute_discordant(a, b)) / static_cast<double>(B * (B - 1) / 2);
      if (fast != brute) ++mismatches;
      ++pairs;
    }
  }
  const double t = sw.seconds();
  report(2, mismatches == 0 && t < kTauBudget, "Kendall tau oracle",
         fmt::format("{} of {} pairs differ, {:.2f}s", mismatches, pairs, t));
}

void ac3() {
  Stopwatch sw;
  sim::Rng rng(31);

  std::vector<double> count(12, 0.0);
  for (int call = 0; call < 50; ++call) {
    for (double v : sim::sample_stages(desk_exp(3), rng, 200)) count[static_cast<std::size_t>(v) - 1] += 1;
  }
  double worst_freq = 0.0;
  for (double c : count) worst_freq = std::max(worst_freq, std::abs(c / 10000.0 - 1.0 / 12.0));

  const auto k = sim::sample_stages(desk_exp(5), rng, 10000);
  const double mean = std::accumulate(k.begin(), k.end(), 0.0) / static_cast<double>(k.size());
  const double target = 12.0 * 5.0 / 7.0;
  const double mean_rel = std::abs(mean - target) / target;

  const double amp = 2.5, rate = sim::sigmoid_rate(0.0, 1.0, 2.5, 1.0);
  double shift_err = 0.0;
  for (int delta : {-1, 1}) {
    shift_err = std::max(shift_err, std::abs(sim::sigmoid_shift(4.0, 4.0, amp, rate, delta) - delta * amp / 2));
    shift_err = std::max(shift_err, std::abs(sim::sigmoid_shift(54.0, 4.0, amp, rate, delta) - delta * amp));
  }

  const double mu = 2.0, sigma = 0.5;
  std::size_t outside = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = sim::sample_family(5, mu, sigma, rng);
    if (x < mu - 4 * sigma || x > mu + 4 * sigma) ++outside;
  }
  const double t = sw.seconds();
  const bool ok = worst_freq <= kFreqTol && mean_rel <= kStageMeanRel && shift_err <= kShiftTol &&
                  outside == 0 && t < kGenBudget;
  report(3, ok, "generator statistics",
         fmt::format("max stage-frequency deviation {:.4f} (tol {}), continuous stage mean {:.4f} "
                     "vs {:.4f} ({:.2f}%), sigmoid shift error {:.1e}, {} Cauchy draws outside "
                     "4 sigma, {:.1f}s",
                     worst_freq, kFreqTol, mean, target, 100 * mean_rel, shift_err, outside, t));
}

void ac4(const DeskRun& run, const std::vector<sim::Dataset>& suite) {
  const auto r = evaluate(predictor_of(run.result.model), suite, run.result.target_mode);
  const bool ok = r.tau.mean <= kExp3Tau && r.staging_mae.mean <= kExp3Mae && run.seconds <= kDeskBudget;
  report(4, ok, "desk-scale Exp 3",
         fmt::format("tau {:.4f} (limit {}), staging MAE {:.4f} (limit {}), best epoch {}, "
                     "training {:.0f}s",
                     r.tau.mean, kExp3Tau, r.staging_mae.mean, kExp3Mae, run.result.best_epoch,
                     run.seconds));
}

void ac5(const DeskRun& run, const std::vector<sim::Dataset>& suite) {
  const auto r = evaluate(predictor_of(run.result.model), suite, run.result.target_mode);
  sim::Rng rng(55);
  std::vector<double> random_mae;
  for (const auto& ds : suite) {
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> s(ds.truth.xi.size());
      for (double& v : s) v = rng.uniform();
      random_mae.push_back(eval::sequence_mae(s, ds.truth.xi, run.result.target_mode));
    }
  }
  const double baseline =
      std::accumulate(random_mae.begin(), random_mae.end(), 0.0) / static_cast<double>(random_mae.size());
  const bool ok = r.tau.mean <= kExp8Tau && std::isfinite(r.sequence_mae.mean) &&
                  r.sequence_mae.mean < baseline && run.seconds <= kDeskBudget;
  report(5, ok, "desk-scale Exp 8",
         fmt::format("tau {:.4f} (limit {}), sequence MAE {:.4f} vs random-score baseline {:.4f}, "
                     "best epoch {}, training {:.0f}s",
                     r.tau.mean, kExp8Tau, r.sequence_mae.mean, baseline, run.result.best_epoch,
                     run.seconds));
}

sim::Cohort permute(const sim::Cohort& c, const std::vector<std::size_t>& perm) {
  sim::Cohort out = c;
  const std::size_t B = c.n_biomarkers;
  for (std::size_t j = 0; j < perm.size(); ++j) {
    out.dx[j] = c.dx[perm[j]];
    for (std::size_t b = 0; b < B; ++b) {
      out.x[j * B + b] = c.x[perm[j] * B + b];
      out.raw[j * B + b] = c.raw[perm[j] * B + b];
    }
  }
  return out;
}

void ac6() {
  double worst_s = 0.0, worst_y = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    model::ModelConfig mc;
    mc.n_biomarkers = 12;
    const model::TempoModel m(mc, 500 + trial);
    const auto c = sim::generate_dataset(desk_exp(1 + static_cast<int>(trial % 9), trial)).cohort;
    sim::Rng rng(trial);
    const auto perm = rng.permutation(c.n_participants);
    const auto a = m.predict(c);
    const auto b = m.predict(permute(c, perm));
    for (std::size_t i = 0; i < a.s.size(); ++i) worst_s = std::max(worst_s, std::abs(a.s[i] - b.s[i]));
    for (std::size_t j = 0; j < perm.size(); ++j) {
      worst_y = std::max(worst_y, std::abs(b.y_hat[j] - a.y_hat[perm[j]]));
    }
  }
  report(6, worst_s < kPermTol && worst_y < kPermTol, "permutation properties",
         fmt::format("20 cohorts, max score change {:.2e}, max stage mismatch {:.2e} (tol {:.0e})",
                     worst_s, worst_y, kPermTol));
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& n_files) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
  }
  std::sort(files.begin(), files.end());
  n_files = files.size();
  for (const auto& f : files) {
    if (!fs::exists(b / f) || io::read_file(a / f) != io::read_file(b / f)) return false;
  }
  return true;
}

void ac7() {
  const fs::path root = fs::temp_directory_path() / fmt::format("tempo_acceptance_{}", ::getpid());
  fs::remove_all(root);
  std::ostringstream log;
  auto gen = [&](const std::string& name, std::uint64_t seed, std::size_t n) {
    cli::GenerateOptions g;
    g.experiment_id = 3;
    g.n_datasets = n;
    g.n_biomarkers = 6;
    g.n_participants = 40;
    g.seed = seed;
    g.out = root / name;
    return cli::cmd_generate(g, log);
  };
  auto trn = [&](const std::string& out) {
    cli::TrainOptions t;
    t.experiment_id = 3;
    t.train_dir = root / "train_a";
    t.val_dir = root / "val";
    t.epochs = 3;
    t.seed = 9;
    t.d_model = 16;
    t.n_heads = 2;
    t.out = root / out;
    return cli::cmd_train(t, log);
  };
  bool ok = gen("train_a", 5, 4) == cli::kSuccess && gen("train_b", 5, 4) == cli::kSuccess &&
            gen("val", 6, 2) == cli::kSuccess;
  std::size_t n_files = 0;
  const bool bundles_same = ok && same_tree(root / "train_a", root / "train_b", n_files);
  ok = ok && trn("a.ckpt") == cli::kSuccess && trn("b.ckpt") == cli::kSuccess;
  const bool ckpt_same = ok && io::read_file(root / "a.ckpt") == io::read_file(root / "b.ckpt") &&
                         io::read_file(root / "a.ckpt.log.csv") == io::read_file(root / "b.ckpt.log.csv");
  fs::remove_all(root);
  report(7, ok && bundles_same && ckpt_same, "determinism",
         fmt::format("generate rerun: {} files {}; train rerun: checkpoint and log {}", n_files,
                     bundles_same ? "identical" : "differ", ckpt_same ? "identical" : "differ"));
}

void ac8() {
  struct Row {
    const char* name;
    std::vector<double> ranks;
    double mean, std;
  };
  const std::vector<Row> table = {
      {"EntorhinalNorm", {1, 3, 1, 1, 2, 3, 2, 1, 1}, 1.7, 0.9},
      {"MidTempNorm", {2, 2, 2, 4, 1, 1, 1, 3, 2}, 2.0, 1.0},
      {"FusiformNorm", {3, 5, 6, 5, 3, 2, 3, 2, 3}, 3.6, 1.4},
      {"ADAS13", {4, 1, 3, 2, 6, 4, 4, 6, 4}, 3.8, 1.6},
      {"RAVLT_immediate", {5, 4, 4, 3, 4, 6, 5, 4, 6}, 4.6, 1.0},
      {"ABETA", {6, 6, 5, 6, 5, 5, 7, 5, 5}, 5.6, 0.7},
      {"HippocampusNorm", {7, 8, 7, 7, 7, 7, 6, 7, 7}, 7.0, 0.5},
      {"MMSE", {8, 7, 8, 8, 8, 8, 8, 8, 9}, 8.0, 0.5},
      {"PTAU", {9, 10, 9, 9, 9, 9, 10, 9, 8}, 9.1, 0.6},
      {"TAU", {10, 9, 10, 10, 10, 10, 9, 10, 10}, 9.8, 0.4},
      {"VentricleNorm", {11, 11, 11, 11, 12, 11, 11, 12, 11}, 11.2, 0.4},
      {"WholeBrainNorm", {12, 12, 12, 12, 11, 12, 12, 11, 12}, 11.8, 0.4},
  };
  std::vector<std::vector<double>> by_model(9, std::vector<double>(table.size()));
  for (std::size_t b = 0; b < table.size(); ++b) {
    for (std::size_t m = 0; m < 9; ++m) by_model[m][b] = table[b].ranks[m];
  }
  const auto c = eval::consensus_from_ranks(by_model);
  auto round1 = [](double v) { return std::round(v * 10.0) / 10.0; };
  std::vector<std::string> bad;
  for (std::size_t b = 0; b < table.size(); ++b) {
    if (std::abs(round1(c.mean[b]) - table[b].mean) > 1e-9 || std::abs(round1(c.std[b]) - table[b].std) > 1e-9) {
      bad.push_back(table[b].name);
    }
  }
  report(8, bad.empty(), "consensus arithmetic",
         fmt::format("{} of {} biomarkers match mean and std to 1 dp (EntorhinalNorm {:.1f}, {:.1f})",
                     table.size() - bad.size(), table.size(), c.mean[0], c.std[0]));
}

void ac9() {
  const double ln2_err = std::abs(train::pair_loss_discrete(0.7, 0.7, 1.0, 2.0) - std::log(2.0));
  const std::vector<double> y_hat{12, 0, 12, 0};
  const std::vector<int> y_star{0, 12, 0, 12};
  const double stage = train::stage_loss(y_hat, y_star, 12);
  bool symmetric = true;
  sim::Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const double sa = rng.normal(), sb = rng.normal(), ta = rng.uniform(), tb = rng.uniform();
    if (train::pair_loss_continuous(sa, sb, ta, tb) != train::pair_loss_continuous(sb, sa, tb, ta)) symmetric = false;
  }
  report(9, ln2_err <= kLn2Tol && stage == 1.0 && symmetric, "loss spot checks",
         fmt::format("pair loss at equal scores off ln 2 by {:.1e}, stage loss at uniform error B "
                     "= {}, continuous pair loss swap-symmetric: {}",
                     ln2_err, stage, symmetric ? "yes" : "no"));
}

void ac10(const DeskRun& m3, const DeskRun& m8, const std::vector<sim::Dataset>& s3,
          const std::vector<sim::Dataset>& s8) {
  auto tau = [](const DeskRun& m, const std::vector<sim::Dataset>& s) {
    return evaluate(predictor_of(m.result.model), s, m.result.target_mode).tau.mean;
  };
  const double t33 = tau(m3, s3), t38 = tau(m3, s8), t83 = tau(m8, s3), t88 = tau(m8, s8);
  report(10, t33 < t83 && t88 < t38, "cross-eval diagonal dominance",
         fmt::format("tau on suite 3: model 3 {:.4f}, model 8 {:.4f}; on suite 8: model 3 {:.4f}, "
                     "model 8 {:.4f}",
                     t33, t83, t38, t88));
}

void guarded(int id, const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(id, false, "exception", e.what());
  }
}

}  // namespace

int main() {
  guarded(1, ac1);
  guarded(2, ac2);
  guarded(3, ac3);

  std::vector<sim::Dataset> s3, s8;
  DeskRun m3, m8;
  bool desk_ok = true;
  try {
    s3 = test_suite(3);
    s8 = test_suite(8);
    m3 = desk_train(3);
    m8 = desk_train(8);
  } catch (const std::exception& e) {
    desk_ok = false;
    for (int id : {4, 5}) report(id, false, "desk-scale training", e.what());
  }
  if (desk_ok) {
    guarded(4, [&] { ac4(m3, s3); });
    guarded(5, [&] { ac5(m8, s8); });
  }

  guarded(6, ac6);
  guarded(7, ac7);
  guarded(8, ac8);
  guarded(9, ac9);
  if (desk_ok) {
    guarded(10, [&] { ac10(m3, m8, s3, s8); });
  } else {
    report(10, false, "cross-eval diagonal dominance", "desk-scale models unavailable");
  }

  fmt::print("{} of 10 criteria passed\n", 10 - n_failed);
  return n_failed == 0 ? 0 : 1;
}
