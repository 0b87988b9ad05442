#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tempo/errors.hpp"
#include "tempo/eval/metrics.hpp"
#include "tempo/eval/report.hpp"
#include "tempo/sim/generator.hpp"

using namespace tempo;
using namespace tempo::eval;

namespace {

// O(B^2) pair enumeration.
double tau_oracle(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const std::size_t n = a.size();
  std::vector<std::size_t> pa(n), pb(n);
  for (std::size_t i = 0; i < n; ++i) {
    pa[a[i]] = i;
    pb[b[i]] = i;
  }
  std::size_t bad = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bad += (pa[i] < pa[j]) != (pb[i] < pb[j]);
    }
  }
  return static_cast<double>(bad) / (static_cast<double>(n * (n - 1)) / 2.0);
}

std::vector<std::size_t> iota_vec(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

double round1(double v) { return std::round(v * 10.0) / 10.0; }

struct Table6Row {
  const char* name;
  std::vector<double> ranks;
  double mean, std, lo, hi;
};

// Nine per-model rank positions of twelve biomarkers with published
// mean, std and 95% interval.
const std::vector<Table6Row> kTable6 = {
    {"EntorhinalNorm", {1, 3, 1, 1, 2, 3, 2, 1, 1}, 1.7, 0.9, 1.0, 2.3},
    {"MidTempNorm", {2, 2, 2, 4, 1, 1, 1, 3, 2}, 2.0, 1.0, 1.2, 2.8},
    {"FusiformNorm", {3, 5, 6, 5, 3, 2, 3, 2, 3}, 3.6, 1.4, 2.5, 4.7},
    {"ADAS13", {4, 1, 3, 2, 6, 4, 4, 6, 4}, 3.8, 1.6, 2.5, 5.0},
    {"RAVLT_immediate", {5, 4, 4, 3, 4, 6, 5, 4, 6}, 4.6, 1.0, 3.8, 5.3},
    {"ABETA", {6, 6, 5, 6, 5, 5, 7, 5, 5}, 5.6, 0.7, 5.0, 6.1},
    {"HippocampusNorm", {7, 8, 7, 7, 7, 7, 6, 7, 7}, 7.0, 0.5, 6.6, 7.4},
    {"MMSE", {8, 7, 8, 8, 8, 8, 8, 8, 9}, 8.0, 0.5, 7.6, 8.4},
    {"PTAU", {9, 10, 9, 9, 9, 9, 10, 9, 8}, 9.1, 0.6, 8.6, 9.6},
    {"TAU", {10, 9, 10, 10, 10, 10, 9, 10, 10}, 9.8, 0.4, 9.4, 10.1},
    {"VentricleNorm", {11, 11, 11, 11, 12, 11, 11, 12, 11}, 11.2, 0.4, 10.9, 11.6},
    {"WholeBrainNorm", {12, 12, 12, 12, 11, 12, 12, 11, 12}, 11.8, 0.4, 11.4, 12.1},
};

std::vector<std::vector<double>> table6_by_model() {
  std::vector<std::vector<double>> out(9, std::vector<double>(kTable6.size()));
  for (std::size_t b = 0; b < kTable6.size(); ++b) {
    for (std::size_t m = 0; m < 9; ++m) out[m][b] = kTable6[b].ranks[m];
  }
  return out;
}

sim::Dataset small_dataset(int exp, std::uint64_t seed) {
  sim::ExperimentConfig c;
  c.experiment_id = exp;
  c.seed = seed;
  c.n_biomarkers = 5;
  c.n_participants = 12;
  return sim::generate_dataset(c);
}

// Scores that reproduce the truth exactly: normalized ranks/times.
Prediction oracle_prediction(const sim::Dataset& ds, TargetMode mode) {
  Prediction p;
  const auto& xi = ds.truth.xi;
  const double lo = *std::min_element(xi.begin(), xi.end());
  const double hi = *std::max_element(xi.begin(), xi.end());
  for (double v : xi) {
    p.s.push_back(mode == TargetMode::kRank ? (v - 1) / (xi.size() - 1.0) : (v - lo) / (hi - lo));
  }
  p.y_hat.assign(ds.truth.y_star.begin(), ds.truth.y_star.end());
  return p;
}

}  // namespace

TEST_SUITE("kendall tau") {
  TEST_CASE("identical, reversed, one swap") {
    const auto id = iota_vec(12);
    auto rev = id;
    std::reverse(rev.begin(), rev.end());
    auto swap = id;
    std::swap(swap[4], swap[5]);
    CHECK(normalized_kendall_tau(id, id) == 0.0);
    CHECK(normalized_kendall_tau(rev, id) == 1.0);
    CHECK(normalized_kendall_tau(swap, id) == doctest::Approx(1.0 / 66.0).epsilon(1e-12));
  }

  TEST_CASE("merge count equals pair enumeration") {
    sim::Rng rng(1);
    std::vector<std::size_t> sizes{100};
    for (std::size_t b = 2; b <= 12; ++b) sizes.push_back(b);
    for (std::size_t B : sizes) {
      for (int t = 0; t < 1000; ++t) {
        const auto a = rng.permutation(B), b = rng.permutation(B);
        const double fast = normalized_kendall_tau(a, b);
        CHECK(fast == tau_oracle(a, b));
        CHECK(fast == normalized_kendall_tau(b, a));
      }
    }
  }

  TEST_CASE("invariant under relabeling") {
    sim::Rng rng(2);
    for (int t = 0; t < 50; ++t) {
      const auto a = rng.permutation(9), b = rng.permutation(9), relabel = rng.permutation(9);
      std::vector<std::size_t> ra(9), rb(9);
      for (std::size_t i = 0; i < 9; ++i) {
        ra[i] = relabel[a[i]];
        rb[i] = relabel[b[i]];
      }
      CHECK(normalized_kendall_tau(ra, rb) == normalized_kendall_tau(a, b));
    }
  }

  TEST_CASE("inversion count") {
    CHECK(count_inversions({0, 1, 2}) == 0);
    CHECK(count_inversions({2, 1, 0}) == 3);
    CHECK(count_inversions({1, 0, 3, 2}) == 2);
  }

  TEST_CASE("non-permutations are rejected") {
    const std::vector<std::size_t> a{0, 1, 2}, b{0, 1, 1}, c{0, 1};
    CHECK_THROWS_AS(normalized_kendall_tau(a, b), std::invalid_argument);
    CHECK_THROWS_AS(normalized_kendall_tau(a, c), std::invalid_argument);
  }

  TEST_CASE("score order sorts ascending with index tie-break") {
    const std::vector<double> s{0.5, -1.0, 0.5, 2.0};
    CHECK(order_by_value(s) == std::vector<std::size_t>{1, 0, 2, 3});
  }
}

TEST_SUITE("staging mae") {
  TEST_CASE("basic values") {
    const std::vector<int> y{0, 2, 5, 12};
    const std::vector<double> perfect{0, 2, 5, 12}, off{1, 3, 6, 11};
    CHECK(staging_mae(perfect, y, 12) == 0.0);
    CHECK(staging_mae(off, y, 12) == 1.0);
    const std::vector<double> worst{12, 12, 12, 0};
    const std::vector<int> zeros{0, 0, 0, 12};
    CHECK(staging_mae(worst, zeros, 12) <= 12.0);
  }

  TEST_CASE("clamp and round versus raw") {
    const std::vector<int> y{0, 4, 12};
    const std::vector<double> yh{-3.0, 4.4, 15.0};
    CHECK(staging_mae(yh, y, 12) == 0.0);
    CHECK(staging_mae(yh, y, 12, StageRounding::kRaw) == doctest::Approx((3.0 + 0.4 + 3.0) / 3));
    const std::vector<double> half{0.5, 3.5, 11.6};
    CHECK(staging_mae(half, y, 12) == doctest::Approx((1.0 + 0.0 + 0.0) / 3));
  }
}

TEST_SUITE("sequence mae") {
  TEST_CASE("exact targets give zero") {
    const std::vector<double> xi{3, 1, 2, 5, 4};
    std::vector<double> s;
    for (double v : xi) s.push_back((v - 1) / 4);
    CHECK(sequence_mae(s, xi, TargetMode::kRank) == doctest::Approx(0.0));
    const std::vector<double> t{2.0, 7.5, 4.0};
    const std::vector<double> st{0.0, 1.0, 2.0 / 5.5};
    CHECK(sequence_mae(st, t, TargetMode::kTime) == doctest::Approx(0.0));
  }

  TEST_CASE("constant score offset of one rank step") {
    const std::vector<double> xi{1, 2, 3, 4, 5, 6};
    std::vector<double> s;
    for (double v : xi) s.push_back((v - 1) / 5 + 1.0 / 5);
    CHECK(sequence_mae(s, xi, TargetMode::kRank) == doctest::Approx(1.0));
  }

  TEST_CASE("random inputs match a direct evaluation") {
    sim::Rng rng(3);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> s(5), xi(5);
      for (auto& v : s) v = rng.uniform(-1, 2);
      for (auto& v : xi) v = rng.uniform(0, 5);
      double lo = xi[0], hi = xi[0];
      for (double v : xi) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      double rank = 0, time = 0;
      for (int b = 0; b < 5; ++b) {
        rank += std::abs(s[b] * 4 + 1 - xi[b]);
        time += std::abs(s[b] * (hi - lo) + lo - xi[b]);
      }
      CHECK(sequence_mae(s, xi, TargetMode::kRank) == doctest::Approx(rank / 5).epsilon(1e-12));
      CHECK(sequence_mae(s, xi, TargetMode::kTime) == doctest::Approx(time / 5).epsilon(1e-12));
    }
  }

  TEST_CASE("mapped timeline is invariant to positive affine score maps") {
    const std::vector<double> s{0.3, -0.2, 1.4, 0.9};
    std::vector<double> t;
    for (double v : s) t.push_back(2.5 * v + 7.0);
    const auto a = continuous_timeline(s), b = continuous_timeline(t);
    for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  }
}

TEST_SUITE("timeline") {
  TEST_CASE("min-max") {
    const std::vector<double> s{2, 4, 6};
    CHECK(continuous_timeline(s) == std::vector<double>{0.0, 0.5, 1.0});
  }

  TEST_CASE("order preserved and endpoints hit") {
    sim::Rng rng(4);
    std::vector<double> s(10);
    for (auto& v : s) v = rng.normal();
    const auto t = continuous_timeline(s);
    CHECK(*std::min_element(t.begin(), t.end()) == 0.0);
    CHECK(*std::max_element(t.begin(), t.end()) == 1.0);
    CHECK(order_by_value(t) == order_by_value(s));
  }

  TEST_CASE("degenerate scores") {
    const std::vector<double> s{1.5, 1.5, 1.5};
    CHECK_THROWS_AS(continuous_timeline(s), NumericError);
  }
}

TEST_SUITE("staging by group") {
  TEST_CASE("one group is the overall mean") {
    const std::vector<double> y{1, 2, 6};
    const std::vector<std::string> g(3, "AD");
    const auto r = staging_by_group(y, g);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].mean == 3.0);
    CHECK(r.groups[0].count == 3);
  }

  TEST_CASE("two groups") {
    const std::vector<double> y{12, 0, 12, 0};
    const std::vector<std::string> g{"AD", "CN", "AD", "CN"};
    const std::vector<std::string> order{"CN", "EMCI", "LMCI", "AD"};
    const auto r = staging_by_group(y, g, order);
    REQUIRE(r.groups.size() == 2);
    CHECK(r.groups[0].label == "CN");
    CHECK(r.groups[0].mean == 0.0);
    CHECK(r.groups[1].label == "AD");
    CHECK(r.groups[1].mean == 12.0);
    CHECK(r.notes.size() == 2);
  }

  TEST_CASE("unlisted labels follow in order of appearance") {
    const std::vector<double> y{1, 2, 3};
    const std::vector<std::string> g{"x", "y", "x"};
    const auto r = staging_by_group(y, g);
    CHECK(r.groups[0].label == "x");
    CHECK(r.groups[0].mean == 2.0);
    CHECK(r.groups[1].label == "y");
  }
}

TEST_SUITE("summary and consensus") {
  TEST_CASE("summary statistics") {
    const std::vector<double> v{1, 2, 3, 4};
    const auto s = summarize(v);
    CHECK(s.mean == 2.5);
    CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.ci_half_width == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(s.n == 4);
    const std::vector<double> one{7};
    CHECK(summarize(one).std == 0.0);
  }

  TEST_CASE("published consensus table") {
    const Consensus c = consensus_from_ranks(table6_by_model());
    for (std::size_t b = 0; b < kTable6.size(); ++b) {
      CAPTURE(kTable6[b].name);
      CHECK(round1(c.mean[b]) == doctest::Approx(kTable6[b].mean));
      CHECK(round1(c.std[b]) == doctest::Approx(kTable6[b].std));
      CHECK(round1(c.ci_low[b]) == doctest::Approx(kTable6[b].lo));
      CHECK(round1(c.ci_high[b]) == doctest::Approx(kTable6[b].hi));
    }
    CHECK(c.order == iota_vec(12));
  }

  TEST_CASE("single ordering") {
    const std::vector<std::vector<std::size_t>> one{{2, 0, 1}};
    const Consensus c = consensus_ranking(one);
    CHECK(c.order == one[0]);
    for (double s : c.std) CHECK(s == 0.0);
    CHECK(c.mean == std::vector<double>{2, 3, 1});
  }

  TEST_CASE("ties broken by std then index") {
    // Biomarker 0 ranks (1, 3), biomarker 1 ranks (2, 2): equal means.
    const std::vector<std::vector<std::size_t>> o{{0, 1, 2}, {2, 1, 0}};
    const Consensus c = consensus_ranking(o);
    CHECK(c.order[0] == 1);
    const std::vector<std::vector<std::size_t>> same{{0, 1}, {1, 0}};
    CHECK(consensus_ranking(same).order == std::vector<std::size_t>{0, 1});
  }

  TEST_CASE("duplicating every ordering keeps the consensus") {
    sim::Rng rng(5);
    std::vector<std::vector<std::size_t>> o;
    for (int i = 0; i < 7; ++i) o.push_back(rng.permutation(8));
    auto doubled = o;
    doubled.insert(doubled.end(), o.begin(), o.end());
    CHECK(consensus_ranking(doubled).order == consensus_ranking(o).order);
  }

  TEST_CASE("positional frequency") {
    const std::vector<std::vector<std::size_t>> o{{0, 1}, {1, 0}, {0, 1}, {0, 1}};
    const auto f = positional_frequency(o);
    CHECK(f[0] == std::vector<double>{0.75, 0.25});
    CHECK(f[1] == std::vector<double>{0.25, 0.75});
    std::ostringstream os;
    const std::vector<std::string> names{"a", "b"};
    write_frequency_csv(os, f, names);
    CHECK(os.str().rfind("biomarker,", 0) == 0);
  }
}

TEST_SUITE("reports") {
  TEST_CASE("oracle predictions score zero") {
    for (int exp : {1, 8}) {
      const auto ds = small_dataset(exp, 3);
      const TargetMode mode = target_mode_for(exp);
      const auto m = evaluate_dataset([&](const sim::Cohort&) { return oracle_prediction(ds, mode); },
                                      ds, mode);
      CHECK(m.tau == 0.0);
      CHECK(m.staging_mae == 0.0);
      CHECK(m.sequence_mae == doctest::Approx(0.0));
      CHECK_FALSE(m.error);
    }
  }

  TEST_CASE("failed rows are excluded from the summary") {
    std::vector<DatasetMetrics> rows(3);
    rows[0] = {"a", 0.1, 1.0, 0.5, {}};
    rows[1] = {"b", 0.3, 2.0, 1.5, {}};
    rows[2] = {"c", 0, 0, 0, std::string("boom")};
    const auto r = make_report(rows);
    CHECK(r.n_failed == 1);
    CHECK(r.tau.n == 2);
    CHECK(r.tau.mean == doctest::Approx(0.2));
    std::ostringstream os;
    write_report_csv(os, r);
    const std::string csv = os.str();
    CHECK(csv.rfind("dataset,status,tau,staging_mae,sequence_mae,", 0) == 0);
    CHECK(csv.find("\nmean,") != std::string::npos);
    CHECK(csv.find("boom") != std::string::npos);
  }

  TEST_CASE("metric names") {
    CHECK(parse_metric("tau") == Metric::kTau);
    CHECK(parse_metric("stage_mae") == Metric::kStagingMae);
    CHECK(to_string(Metric::kSequenceMae) == "seq_mae");
    CHECK_THROWS(parse_metric("auc"));
    const DatasetMetrics m{"x", 0.1, 0.2, 0.3, {}};
    CHECK(metric_of(m, Metric::kStagingMae) == 0.2);
  }
}

TEST_SUITE("cross matrix") {
  TEST_CASE("single model single suite equals the report mean") {
    std::vector<sim::Dataset> suite;
    for (std::uint64_t i = 0; i < 4; ++i) suite.push_back(small_dataset(3, 40 + i));
    const Predictor pred = [](const sim::Cohort& c) {
      Prediction p;
      for (std::size_t b = 0; b < c.n_biomarkers; ++b) p.s.push_back(c.at(c.n_participants - 1, b));
      p.y_hat.assign(c.n_participants, 2.0);
      return p;
    };
    std::vector<DatasetMetrics> rows;
    for (const auto& ds : suite) rows.push_back(evaluate_dataset(pred, ds, TargetMode::kRank));
    const double expect = make_report(rows).tau.mean;
    const auto m = cross_experiment_matrix({{"Exp 3", pred, TargetMode::kRank}},
                                           {{"Exp 3", suite}}, Metric::kTau);
    REQUIRE(m.values.size() == 1);
    CHECK(m.values[0][0] == doctest::Approx(expect).epsilon(1e-15));
    CHECK(m.row_means[0] == m.values[0][0]);
    CHECK(m.col_means[0] == m.values[0][0]);
    CHECK(m.complete());
  }

  TEST_CASE("row and column means, failures") {
    std::vector<CrossSuite> suites;
    for (int e = 1; e <= 3; ++e) suites.push_back({"Exp " + std::to_string(e), {small_dataset(e, e)}});
    std::vector<CrossModel> models;
    for (int k = 0; k < 3; ++k) {
      models.push_back({"m" + std::to_string(k),
                        [k](const sim::Cohort& c) {
                          Prediction p;
                          for (std::size_t b = 0; b < c.n_biomarkers; ++b) {
                            p.s.push_back(c.at(k, b) * (k + 1));
                          }
                          p.y_hat.assign(c.n_participants, static_cast<double>(k));
                          return p;
                        },
                        TargetMode::kRank});
    }
    models.push_back({"broken", [](const sim::Cohort&) -> Prediction {
                        throw std::runtime_error("no weights");
                      },
                      TargetMode::kRank});
    const auto m = cross_experiment_matrix(models, suites, Metric::kStagingMae);
    REQUIRE(m.values.size() == 4);
    for (std::size_t i = 0; i < 3; ++i) {
      const double mean = (m.values[i][0] + m.values[i][1] + m.values[i][2]) / 3;
      CHECK(m.row_means[i] == doctest::Approx(mean).epsilon(1e-15));
    }
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::isnan(m.values[3][j]));
      const double mean = (m.values[0][j] + m.values[1][j] + m.values[2][j]) / 3;
      CHECK(m.col_means[j] == doctest::Approx(mean).epsilon(1e-15));
    }
    CHECK_FALSE(m.complete());
    std::ostringstream os;
    write_matrix_csv(os, m);
    const std::string csv = os.str();
    CHECK(csv.rfind("model,Exp 1,Exp 2,Exp 3,RowMean\n", 0) == 0);
    CHECK(csv.find("broken,NA,NA,NA,NA\n") != std::string::npos);
    CHECK(csv.find("\nColMean,") != std::string::npos);
  }
}
