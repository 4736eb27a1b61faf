#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fedxfer/error.hpp"
#include "fedxfer/experiment.hpp"
#include "fedxfer/rng.hpp"
#include "fedxfer/roc.hpp"
#include "fedxfer/stats.hpp"

using namespace fedxfer;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::harness;
}

// Literal pair count: every (positive, negative) pair scores 1 for a correct
// order, one half for a tie. Exact in floating point for a few thousand pairs
// of dyadic scores, which makes it a bitwise oracle for the rank formulation.
double brute_force_auc(const std::vector<double>& scores,
                       const std::vector<std::int8_t>& labels) {
  double won = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != -1) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) won += 1.0;
      else if (scores[i] == scores[j]) won += 0.5;
    }
  }
  return won / pairs;
}

ExperimentConfig tiny_experiment() {
  ExperimentConfig cfg;
  cfg.dataset_name = "tiny";
  SynthSpec spec;
  spec.n = 160;
  spec.d = 6;
  spec.sep = 8.0;
  spec.sigma_b = 1.0;
  cfg.synthetic = spec;
  cfg.n_labeled = 80;
  cfg.n_unlabeled = 60;
  cfg.overlap_frac = 0.25;
  cfg.hyper.max_iters = 40;
  cfg.hyper.warmup = 5;
  cfg.ae.epochs = 30;
  cfg.ae.hidden_dim = 16;
  cfg.hidden_dim = 16;
  cfg.latent_dim = 4;
  cfg.runs = 3;
  cfg.base_seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("auc on known score patterns") {
  const std::vector<std::int8_t> y = {-1, -1, 1, 1};
  CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, y).xi == 1.0);
  CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, y).xi == 0.0);
  CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, y).xi == 0.5);
  CHECK(roc_auc({0.1, 0.4, 0.35, 0.8}, y).xi == 0.75);
  CHECK(roc_auc({1.0, 1.0}, {1, -1}).xi == 0.5);  // single tied pair
}

TEST_CASE("auc equals the brute force pair count bitwise") {
  Rng rng(424242);
  std::size_t checked = 0;
  for (int instance = 0; instance < 500; ++instance) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<double> scores(n);
    std::vector<std::int8_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(33)) / 16.0 - 1.0;
      labels[i] = rng.next_u64() % 2 == 0 ? std::int8_t{1} : std::int8_t{-1};
    }
    labels[0] = 1;  // force both classes
    labels[n - 1] = -1;
    const double xi = roc_auc(scores, labels).xi;
    CHECK(xi == brute_force_auc(scores, labels));
    checked += 1;
  }
  CHECK(checked == 500);
}

TEST_CASE("roc sweep runs monotonically from origin to the far corner") {
  Rng rng(7);
  std::vector<double> scores(40);
  std::vector<std::int8_t> labels(40);
  for (std::size_t i = 0; i < 40; ++i) {
    scores[i] = rng.uniform(-2.0, 2.0);
    labels[i] = i % 3 == 0 ? std::int8_t{1} : std::int8_t{-1};
  }
  const AucResult r = roc_auc(scores, labels);
  REQUIRE(r.points.size() >= 2);
  CHECK(r.points.front().fpr == 0.0);
  CHECK(r.points.front().tpr == 0.0);
  CHECK(r.points.back().fpr == 1.0);
  CHECK(r.points.back().tpr == 1.0);
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    CHECK(r.points[i].fpr >= r.points[i - 1].fpr);
    CHECK(r.points[i].tpr >= r.points[i - 1].tpr);
    CHECK(r.points[i].threshold <= r.points[i - 1].threshold);
  }
  CHECK(r.xi >= 0.0);
  CHECK(r.xi <= 1.0);
}

TEST_CASE("auc is invariant under monotone score transforms") {
  Rng rng(99);
  std::vector<double> scores(30);
  std::vector<std::int8_t> labels(30);
  for (std::size_t i = 0; i < 30; ++i) {
    // dyadic grid: affine and cubic transforms stay exact and order-true
    scores[i] = (static_cast<double>(rng.below(81)) - 40.0) / 16.0;
    labels[i] = rng.next_u64() % 2 == 0 ? std::int8_t{1} : std::int8_t{-1};
  }
  labels[0] = 1;
  labels[1] = -1;
  const double base = roc_auc(scores, labels).xi;

  std::vector<double> affine = scores;
  for (double& s : affine) s = 2.0 * s + 3.0;
  CHECK(roc_auc(affine, labels).xi == base);

  std::vector<double> cubic = scores;
  for (double& s : cubic) s = s * s * s;
  CHECK(roc_auc(cubic, labels).xi == base);
}

TEST_CASE("auc input validation") {
  CHECK(code_of([] { roc_auc({0.1, 0.2}, {1}); }) == ErrorCode::dimension_mismatch);
  CHECK(code_of([] { roc_auc({0.1, 0.2}, {1, 0}); }) == ErrorCode::label);
  CHECK(code_of([] { roc_auc({0.1, 0.2}, {1, 1}); }) == ErrorCode::evaluation);
  CHECK(code_of([] { roc_auc({0.1, 0.2}, {-1, -1}); }) == ErrorCode::evaluation);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { roc_auc({0.1, inf}, {1, -1}); }) == ErrorCode::evaluation);
  CHECK(code_of([&] { roc_auc({0.1, std::nan("")}, {1, -1}); }) == ErrorCode::evaluation);
  CHECK(code_of([] { roc_auc({}, {}); }) == ErrorCode::evaluation);
}

TEST_CASE("normal quantile matches reference values") {
  // reference doubles computed with 50-digit arithmetic, then rounded
  CHECK(std::abs(normal_inverse_cdf(0.01) - -2.326347874040841) < 1e-9);
  CHECK(std::abs(normal_inverse_cdf(0.03) - -1.8807936081512509) < 1e-9);
  CHECK(std::abs(normal_inverse_cdf(0.05) - -1.6448536269514726) < 1e-9);
  CHECK(std::abs(normal_inverse_cdf(1e-6) - -4.753424308822899) < 1e-9);
  CHECK(normal_inverse_cdf(0.5) == 0.0);

  for (const double p : {0.01, 0.03, 0.05, 0.2, 0.4}) {
    CHECK(std::abs(normal_inverse_cdf(1.0 - p) + normal_inverse_cdf(p)) < 1e-9);
  }
  for (double p = 0.001; p < 1.0; p += 0.0625) {
    CHECK(std::abs(normal_cdf(normal_inverse_cdf(p)) - p) < 1e-9);
  }

  CHECK(code_of([] { normal_inverse_cdf(0.0); }) == ErrorCode::evaluation);
  CHECK(code_of([] { normal_inverse_cdf(1.0); }) == ErrorCode::evaluation);
  CHECK(code_of([] { normal_inverse_cdf(-0.1); }) == ErrorCode::evaluation);
  CHECK(code_of([] { normal_inverse_cdf(1.1); }) == ErrorCode::evaluation);
}

TEST_CASE("normal cdf basics") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(std::abs(normal_cdf(1.959963984540054) - 0.975) < 1e-9);
  for (const double x : {-2.0, -0.5, 0.3, 1.7}) {
    CHECK(std::abs(normal_cdf(x) + normal_cdf(-x) - 1.0) < 1e-12);
  }
}

TEST_CASE("series stats and significance") {
  const std::vector<double> series = {88.0, 90.0, 92.0};
  const SeriesStats stats = series_stats(series);
  CHECK(stats.mean == 90.0);
  CHECK(stats.stddev == 2.0);

  // p = 50 sits at the distribution median: the fit collapses to the mean
  CHECK(significance(series, 50.0) == 90.0);
  CHECK(std::abs(significance(series, 5.0) - 86.71029274609705) < 1e-9);

  // hand recomposition on an unrelated series
  const std::vector<double> other = {0.91, 0.84, 0.88, 0.95, 0.79};
  const SeriesStats os = series_stats(other);
  for (const double p : {1.0, 3.0, 5.0, 25.0}) {
    const double expected = os.mean + os.stddev * normal_inverse_cdf(p / 100.0);
    CHECK(std::abs(significance(other, p) - expected) < 1e-9);
  }

  CHECK(significance({7.0, 7.0, 7.0, 7.0}, 5.0) == 7.0);
  CHECK(significance(series, 1.0) < significance(series, 5.0));
  CHECK(significance(series, 5.0) < significance(series, 50.0));
  CHECK(significance(series, 50.0) < significance(series, 95.0));

  CHECK(code_of([] { series_stats({1.0}); }) == ErrorCode::evaluation);
  CHECK(code_of([&] { significance({1.0}, 5.0); }) == ErrorCode::evaluation);
  CHECK(code_of([&] { significance(series, 0.0); }) == ErrorCode::evaluation);
  CHECK(code_of([&] { significance(series, 100.0); }) == ErrorCode::evaluation);
}

TEST_CASE("experiment series summarize both methods") {
  const ExperimentConfig cfg = tiny_experiment();
  const ExperimentResult result = run_experiment(cfg);

  CHECK(result.dataset == "tiny");
  CHECK(result.runs == 3);
  CHECK(result.failures.empty());
  REQUIRE(result.methods.size() == 2);
  for (const MethodSummary& m : result.methods) {
    CHECK(m.run_index == std::vector<std::size_t>{0, 1, 2});
    REQUIRE(m.aucs.size() == 3);
    for (const double a : m.aucs) {
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
    }
    REQUIRE(m.mean_auc.has_value());
    REQUIRE(m.sig.size() == 3);
    CHECK(m.sig[0].p_percent == 1.0);
    CHECK(m.sig[1].p_percent == 3.0);
    CHECK(m.sig[2].p_percent == 5.0);
    CHECK(m.sig[2].confidence == 0.95);
    // lower p demands a rarer shortfall, hence a lower guaranteed score
    CHECK(m.sig[0].sig <= m.sig[1].sig);
    CHECK(m.sig[1].sig <= m.sig[2].sig);
  }
  CHECK(result.methods[0].method == Method::ftl);
  CHECK(result.methods[1].method == Method::udl);

  // traces cover every run in order
  REQUIRE(!result.ftl_trace.empty());
  REQUIRE(!result.ae_trace.empty());
  std::uint32_t last_run = 0;
  for (const TraceRow& row : result.ftl_trace) {
    CHECK(row.run >= last_run);
    last_run = row.run;
  }
  CHECK(last_run == 2);
  for (const TraceRow& row : result.ae_trace) {
    CHECK(row.losses.j_b == 0.0);
    CHECK(row.losses.total > 0.0);
  }
}

TEST_CASE("experiment reports are worker count independent") {
  ExperimentConfig cfg = tiny_experiment();
  cfg.workers = 1;
  const std::string solo = report_json(run_experiment(cfg));
  cfg.workers = 3;
  const std::string pooled = report_json(run_experiment(cfg));
  CHECK(solo == pooled);
}

TEST_CASE("single run reports the raw auc without a significance fit") {
  ExperimentConfig cfg = tiny_experiment();
  cfg.runs = 1;
  const ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.methods.size() == 2);
  for (const MethodSummary& m : result.methods) {
    CHECK(m.aucs.size() == 1);
    CHECK(!m.mean_auc.has_value());
    CHECK(m.sig.empty());
  }
  const std::string csv = report_csv(result);
  CHECK(csv.find("dataset,method,p,Sig,mean_auc,std_auc\n") == 0);
  CHECK(csv.find("tiny,FTL,,,") != std::string::npos);
  CHECK(csv.find("tiny,UDL,,,") != std::string::npos);
}

TEST_CASE("report json round trips to the same csv") {
  const ExperimentResult result = run_experiment(tiny_experiment());
  const std::string csv = report_csv(result);
  CHECK(csv.find("tiny,FTL,1,") != std::string::npos);
  CHECK(csv.find("tiny,UDL,5,") != std::string::npos);
  CHECK(report_csv_from_json(report_json(result)) == csv);
  CHECK(code_of([] { report_csv_from_json("{"); }) == ErrorCode::load);
  CHECK(code_of([] { report_csv_from_json(R"({"dataset": "x"})"); }) == ErrorCode::load);
}

TEST_CASE("experiment fails when too many runs fail") {
  ExperimentConfig cfg = tiny_experiment();
  cfg.methods = {Method::ftl};
  cfg.runs = 2;
  cfg.hyper.eta = 1e9;  // guaranteed divergence
  cfg.hyper.max_iters = 120;
  cfg.hyper.warmup = 119;
  try {
    run_experiment(cfg);
    FAIL("should have failed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::harness);
    CHECK(std::string(e.what()).find("0 of 2 runs succeeded") != std::string::npos);
    CHECK(std::string(e.what()).find("smaller learning rate") != std::string::npos);
  }
}

TEST_CASE("experiment config validation") {
  CHECK(code_of([] {
          ExperimentConfig cfg;
          cfg.validate();  // no dataset source
        }) == ErrorCode::config);
  ExperimentConfig cfg = tiny_experiment();
  cfg.data = EncodedDataset{};
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::config);  // two sources
  ExperimentConfig no_methods = tiny_experiment();
  no_methods.methods.clear();
  CHECK(code_of([&] { no_methods.validate(); }) == ErrorCode::config);
  ExperimentConfig no_runs = tiny_experiment();
  no_runs.runs = 0;
  CHECK(code_of([&] { no_runs.validate(); }) == ErrorCode::config);
  ExperimentConfig no_workers = tiny_experiment();
  no_workers.workers = 0;
  CHECK(code_of([&] { no_workers.validate(); }) == ErrorCode::config);
  ExperimentConfig unnamed = tiny_experiment();
  unnamed.dataset_name.clear();
  CHECK(code_of([&] { unnamed.validate(); }) == ErrorCode::config);
}

TEST_CASE("method names round trip") {
  CHECK(method_from_name("FTL") == Method::ftl);
  CHECK(method_from_name("udl") == Method::udl);
  CHECK(method_name(Method::ftl) == "FTL");
  CHECK(method_name(Method::udl) == "UDL");
  CHECK(code_of([] { method_from_name("svm"); }) == ErrorCode::config);
}
