#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "interpnn/experiments.hpp"

using namespace interpnn;

namespace {

ExperimentConfig tiny_ratio_config() {
  ExperimentConfig cfg;
  cfg.study = Study::kRatioCurve;
  cfg.d = 2;
  cfg.n = 64;
  cfg.n_test = 128;
  cfg.reps = {3, 4};
  cfg.gamma_over_d_grid = {0.0, 0.1, 0.35};
  cfg.seed = {2718, 0};
  return cfg;
}

LabeledDataset single_class_dataset(std::size_t n) {
  Rng rng({31337, 0});
  LabeledDataset ds(Task::kClassification, 2);
  for (std::size_t i = 0; i < n; ++i)
    ds.add(std::vector<double>{rng.next_normal(), rng.next_normal()}, 0.0);
  return ds;
}

LabeledDataset shuffled(const LabeledDataset& ds, RngSeed seed) {
  Rng rng(seed);
  std::vector<std::uint32_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.next_below(i + 1)]);
  LabeledDataset out(ds.task(), ds.dim());
  for (auto i : order) out.add(ds.point(i), ds.label(i));
  return out;
}

}  // namespace

TEST_CASE("ratio curve with the trivial grid is exactly one") {
  auto cfg = tiny_ratio_config();
  cfg.gamma_over_d_grid = {0.0};
  const auto curve = run_ratio_curve(cfg);
  REQUIRE(curve.points.size() == 2);  // one mse row, one regret row
  for (const auto& p : curve.points) {
    CHECK(p.sim_ratio == 1.0);
    CHECK(p.std_error == 0.0);
    CHECK(p.theory_pr.has_value());
    CHECK(*p.theory_pr == 1.0);
  }
}

TEST_CASE("ratio curve smoke run: shapes, theory column, determinism") {
  const auto cfg = tiny_ratio_config();
  const auto curve = run_ratio_curve(cfg);
  REQUIRE(curve.points.size() == 6);
  for (const auto& p : curve.points) {
    CHECK(p.sim_ratio > 0.0);
    if (p.gamma_over_d == 0.0) {
      CHECK(p.sim_ratio == 1.0);
      CHECK(p.std_error == 0.0);
    }
    // theory present exactly when gamma/d < 1/3
    CHECK(p.theory_pr.has_value() == (p.gamma_over_d < 1.0 / 3.0));
  }

  // byte-identical CSV across thread counts
  auto cfg1 = cfg;
  cfg1.threads = 1;
  auto cfg2 = cfg;
  cfg2.threads = 2;
  CHECK(to_csv(run_ratio_curve(cfg1)) == to_csv(curve));
  CHECK(to_csv(run_ratio_curve(cfg2)) == to_csv(curve));
}

TEST_CASE("ratio curve validates its config") {
  auto cfg = tiny_ratio_config();
  cfg.study = Study::kCisCurve;
  CHECK_THROWS_AS(run_ratio_curve(cfg), ConfigError);

  cfg = tiny_ratio_config();
  cfg.gamma_over_d_grid = {0.1, 0.2};  // missing the kNN reference point
  CHECK_THROWS_AS(run_ratio_curve(cfg), ConfigError);

  cfg = tiny_ratio_config();
  cfg.gamma_over_d_grid.clear();
  CHECK_THROWS_AS(run_ratio_curve(cfg), ConfigError);

  cfg = tiny_ratio_config();
  cfg.reps = {0, 5};
  CHECK_THROWS_AS(run_ratio_curve(cfg), ConfigError);
}

TEST_CASE("cis curve: identical training pairs disagree nowhere") {
  ExperimentConfig cfg;
  cfg.study = Study::kCisCurve;
  cfg.d = 2;
  cfg.n = 48;
  cfg.n_test = 64;
  cfg.reps.classification = 3;
  cfg.gamma_over_d_grid = {0.0, 0.15, 0.3};
  cfg.cis_identical_pairs = true;
  cfg.seed = {5, 0};
  const auto curve = run_cis_curve(cfg);
  REQUIRE(curve.mean_cis_optimal.size() == 3);
  for (double level : curve.mean_cis_optimal) CHECK(level == 0.0);
  for (double level : curve.mean_cis_fixed) CHECK(level == 0.0);
}

TEST_CASE("cis curve smoke run: policies, ratios, determinism") {
  ExperimentConfig cfg;
  cfg.study = Study::kCisCurve;
  cfg.d = 2;
  cfg.n = 64;
  cfg.n_test = 128;
  cfg.reps.classification = 4;
  cfg.gamma_over_d_grid = {0.0, 0.1, 0.35};
  cfg.seed = {99, 1};
  const auto curve = run_cis_curve(cfg);
  REQUIRE(curve.points.size() == 6);
  int optimal_rows = 0, fixed_rows = 0;
  for (const auto& p : curve.points) {
    if (p.k_policy == "optimal") ++optimal_rows;
    if (p.k_policy == "fixed") ++fixed_rows;
    if (p.gamma_over_d == 0.0) CHECK(p.sim_ratio == 1.0);
    CHECK(p.theory_sqrt_pr.has_value() == (p.gamma_over_d < 1.0 / 3.0));
    if (p.theory_sqrt_pr)
      CHECK_THAT(*p.theory_sqrt_pr * *p.theory_sqrt_pr,
                 Catch::Matchers::WithinAbs(pr(cfg.d, p.gamma), 1e-12));
  }
  CHECK(optimal_rows == 3);
  CHECK(fixed_rows == 3);

  auto threaded = cfg;
  threaded.threads = 2;
  CHECK(to_csv(run_cis_curve(threaded)) == to_csv(curve));
}

TEST_CASE("rate check returns rows, argmins and finite slopes") {
  ExperimentConfig cfg;
  cfg.study = Study::kRateCheck;
  cfg.d = 2;
  cfg.n_grid = {16, 32, 64};
  cfg.n_test = 64;
  cfg.reps.regression = 3;
  cfg.gamma_over_d_grid = {0.0, 0.2};
  cfg.seed = {456, 0};
  const auto result = run_rate_check(cfg);
  REQUIRE(result.rows.size() == 6);
  for (const auto& row : result.rows) {
    CHECK(row.best_k >= 1.0);
    CHECK(row.best_mse > 0.0);
    CHECK(row.std_error >= 0.0);
  }
  REQUIRE(result.slopes.size() == 2);
  for (double s : result.slopes) CHECK(std::isfinite(s));
  REQUIRE(result.best_k_at_max_n.size() == 2);
  CHECK(result.best_k_at_max_n[0].size() == 3);
  // MSE at the largest n is below MSE at the smallest n for gamma = 0
  double mse_small = 0.0, mse_large = 0.0;
  for (const auto& row : result.rows) {
    if (row.gamma == 0.0 && row.n == 16) mse_small = row.best_mse;
    if (row.gamma == 0.0 && row.n == 64) mse_large = row.best_mse;
  }
  CHECK(mse_large < mse_small);
}

TEST_CASE("real data: single-class input gives zero error everywhere") {
  ExperimentConfig cfg;
  cfg.study = Study::kRealData;
  cfg.reps.classification = 5;
  cfg.gamma_over_d_grid = {0.0, 0.1, 0.3};
  cfg.seed = {7, 0};
  const auto result = run_real_data(single_class_dataset(60), "degenerate", cfg);
  REQUIRE(result.rows.size() == 3);
  for (const auto& row : result.rows) {
    CHECK(row.mean_error == 0.0);
    CHECK(row.std_error == 0.0);
  }
  CHECK(result.rows[0].best);  // ties resolve to the first row
}

TEST_CASE("real data output is invariant to input row order") {
  Rng rng({2222, 0});
  LabeledDataset ds(Task::kClassification, 3);
  for (int i = 0; i < 80; ++i) {
    const double y = double(rng.next_below(2));
    ds.add(std::vector<double>{rng.next_normal(y, 1.0), rng.next_normal(-y, 1.0),
                               rng.next_normal()},
           y);
  }
  ExperimentConfig cfg;
  cfg.study = Study::kRealData;
  cfg.reps.classification = 4;
  cfg.gamma_over_d_grid = {0.0, 0.2};
  cfg.seed = {11, 0};
  const auto base = run_real_data(ds, "toy", cfg);
  const auto reshuffled = run_real_data(shuffled(ds, {1, 1}), "toy", cfg);
  CHECK(to_csv(base) == to_csv(reshuffled));

  auto threaded = cfg;
  threaded.threads = 2;
  CHECK(to_csv(run_real_data(ds, "toy", threaded)) == to_csv(base));

  // exactly one best row
  int best_count = 0;
  for (const auto& row : base.rows) best_count += row.best ? 1 : 0;
  CHECK(best_count == 1);
}

TEST_CASE("real data rejects regression datasets and bad fractions") {
  ExperimentConfig cfg;
  cfg.study = Study::kRealData;
  cfg.seed = {1, 0};
  LabeledDataset ds(Task::kRegression, 1);
  ds.add(std::vector<double>{0.0}, 0.5);
  CHECK_THROWS_AS(run_real_data(ds, "x", cfg), TaskMismatchError);

  cfg.train_fraction = 1.5;
  CHECK_THROWS_AS(run_real_data(single_class_dataset(40), "x", cfg), ConfigError);
}

TEST_CASE("fast score walk agrees with the model prediction path") {
  // the experiments module scores all k in one pass using the cancellation
  // of the normalizing radius; predictions must match the estimator API,
  // which normalizes by R_{k+1} explicitly
  Rng rng({31415, 0});
  const MixtureModel model{3};
  const auto train = sample(model, 100, {31415, 1});
  const auto shared = std::make_shared<const LabeledDataset>(train);
  const auto index = std::make_shared<const NeighborIndex>(*shared);
  const int k_max = 40;
  std::vector<double> scores(k_max);
  for (int qi = 0; qi < 25; ++qi) {
    // mix fresh queries with exact training points (zero-distance rule)
    const Point q = qi % 5 == 0
                        ? Point(train.point(static_cast<std::size_t>(qi)).begin(),
                                train.point(static_cast<std::size_t>(qi)).end())
                        : Point{rng.next_normal(1.5, 2.0), rng.next_normal(1.5, 2.0),
                                rng.next_normal(1.5, 2.0)};
    const detail::RankedQuery ranked(train, q, k_max);
    for (const double gamma : {0.0, 0.3, 1.2, 4.0}) {
      ranked.scores(gamma, scores);
      for (const int k : {1, 2, 7, 23, 40}) {
        const FittedModel m(shared, index, Interpolated{gamma}, k);
        CHECK_THAT(scores[static_cast<std::size_t>(k - 1)],
                   Catch::Matchers::WithinAbs(m.predict_regression(q), 1e-12));
      }
    }
  }
}

TEST_CASE("optimize_k drives a real evaluation objective") {
  const MixtureModel model{2};
  const BayesOracle oracle(model);
  const auto train = std::make_shared<const LabeledDataset>(sample(model, 256, {8, 0}));
  const auto queries = sample_queries(model, 256, {8, 1});
  const auto objective = [&](const FittedModel& m) {
    return eval_mse(m, [&](std::span<const double> q) { return oracle.eta(q); }, queries);
  };
  const auto grid = default_k_grid(255);
  const auto best = optimize_k(train, Interpolated{0.4}, grid, objective);
  CHECK(best.k > 1);
  CHECK(best.k < 255);
  CHECK(best.report.value > 0.0);
  // the reported value is the grid minimum
  for (int k : {best.k / 2, best.k * 2}) {
    if (k < 1 || k + 1 > 256) continue;
    const FittedModel m(train, std::make_shared<const NeighborIndex>(*train),
                        Interpolated{0.4}, k);
    CHECK(objective(m).value >= best.report.value);
  }
}

TEST_CASE("max_k caps the search range") {
  ExperimentConfig cfg;
  cfg.study = Study::kRateCheck;
  cfg.d = 2;
  cfg.n_grid = {32, 64};
  cfg.n_test = 64;
  cfg.reps.regression = 2;
  cfg.gamma_over_d_grid = {0.0, 0.2};
  cfg.max_k = 5;
  cfg.seed = {64, 0};
  const auto result = run_rate_check(cfg);
  for (const auto& row : result.rows) CHECK(row.best_k <= 5.0);
}

TEST_CASE("INTERPNN_THREADS caps the worker count") {
  ::setenv("INTERPNN_THREADS", "1", 1);
  CHECK(detail::resolve_threads(8) == 1);
  CHECK(detail::resolve_threads(0) == 1);
  ::setenv("INTERPNN_THREADS", "3", 1);
  CHECK(detail::resolve_threads(2) == 2);
  ::unsetenv("INTERPNN_THREADS");
  CHECK(detail::resolve_threads(2) == 2);
  CHECK(detail::resolve_threads(0) >= 1);
}

TEST_CASE("csv emitters use the exact schemas") {
  const auto ratio = to_csv(run_ratio_curve(tiny_ratio_config()));
  CHECK(ratio.rfind("d,n,gamma,gamma_over_d,metric,sim_ratio,stderr,theory_pr\n", 0) == 0);
  CHECK(ratio.find("NA") != std::string::npos);  // the 0.35 rows

  ExperimentConfig cis_cfg;
  cis_cfg.study = Study::kCisCurve;
  cis_cfg.d = 2;
  cis_cfg.n = 32;
  cis_cfg.n_test = 32;
  cis_cfg.reps.classification = 2;
  cis_cfg.gamma_over_d_grid = {0.0, 0.1};
  cis_cfg.seed = {3, 3};
  const auto cis = to_csv(run_cis_curve(cis_cfg));
  CHECK(cis.rfind("d,n,gamma,gamma_over_d,k_policy,sim_cis_ratio,stderr,theory_sqrt_pr\n", 0) ==
        0);
  CHECK(cis.find(",optimal,") != std::string::npos);
  CHECK(cis.find(",fixed,") != std::string::npos);

  ExperimentConfig rate_cfg;
  rate_cfg.study = Study::kRateCheck;
  rate_cfg.n_grid = {16, 32};
  rate_cfg.n_test = 32;
  rate_cfg.reps.regression = 2;
  rate_cfg.gamma_over_d_grid = {0.0, 0.2};
  rate_cfg.seed = {4, 4};
  const auto rate = to_csv(run_rate_check(rate_cfg));
  CHECK(rate.rfind("d,gamma,n,best_k,best_mse,stderr\n", 0) == 0);

  ExperimentConfig rd_cfg;
  rd_cfg.study = Study::kRealData;
  rd_cfg.reps.classification = 2;
  rd_cfg.gamma_over_d_grid = {0.0, 0.1};
  rd_cfg.seed = {5, 5};
  const auto rd = to_csv(run_real_data(single_class_dataset(40), "toy", rd_cfg));
  CHECK(rd.rfind("dataset,d,gamma_over_d,mean_error,stderr,best_flag\n", 0) == 0);
}
