#pragma once

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "interpnn/core.hpp"
#include "interpnn/csv.hpp"
#include "interpnn/estimator.hpp"
#include "interpnn/neighbors.hpp"
#include "interpnn/simgen.hpp"
#include "interpnn/theory.hpp"

namespace interpnn {

enum class Study { kRatioCurve, kCisCurve, kRateCheck, kRealData };

struct RepCounts {
  int regression = 100;
  int classification = 500;
};

inline std::vector<double> default_gamma_over_d_grid() {
  return {0.0, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35};
}

/// Full description of one Monte-Carlo study. Fixed config plus seed pins
/// every output byte.
struct ExperimentConfig {
  Study study = Study::kRatioCurve;
  int d = 2;
  int n = 1024;
  std::vector<int> n_grid = {64, 128, 256, 512, 1024};  // rate-check study
  std::vector<double> gamma_over_d_grid = default_gamma_over_d_grid();
  RepCounts reps;
  int n_test = 2048;
  int max_k = 0;                     // 0: full range k = 1..n-1
  double train_fraction = 0.25;      // real-data outer split
  double validation_fraction = 0.25; // of the training part, for k selection
  int threads = 0;                   // 0: hardware; INTERPNN_THREADS caps it
  bool cis_identical_pairs = false;  // degenerate smoke mode: D2 == D1
  RngSeed seed;
};

struct RatioPoint {
  double gamma = 0.0;
  double gamma_over_d = 0.0;
  std::string metric;  // "mse" | "regret"
  double sim_ratio = 1.0;
  double std_error = 0.0;
  std::optional<double> theory_pr;  // absent outside gamma < d/3
};

struct RatioCurve {
  int d = 0;
  int n = 0;
  std::vector<RatioPoint> points;
};

struct CisPoint {
  double gamma = 0.0;
  double gamma_over_d = 0.0;
  std::string k_policy;  // "optimal" | "fixed"
  double sim_ratio = 1.0;
  double std_error = 0.0;
  std::optional<double> theory_sqrt_pr;
};

struct CisCurve {
  int d = 0;
  int n = 0;
  std::vector<CisPoint> points;
  // mean disagreement levels per gamma (diagnostics; the CSV carries ratios)
  std::vector<double> mean_cis_optimal;
  std::vector<double> mean_cis_fixed;
};

struct RateRow {
  int d = 0;
  double gamma = 0.0;
  int n = 0;
  double best_k = 0.0;    // mean over reps of the per-rep optimal k
  double best_mse = 0.0;  // mean over reps of the per-rep optimal MSE
  double std_error = 0.0;
};

struct RateCheckResult {
  std::vector<RateRow> rows;
  std::vector<double> gammas;
  std::vector<double> slopes;  // least-squares slope of log MSE vs log n, per gamma
  std::vector<std::vector<int>> best_k_at_max_n;  // [gamma][rep]
};

struct RealDataRow {
  double gamma_over_d = 0.0;
  double mean_error = 0.0;
  double std_error = 0.0;
  bool best = false;
};

struct RealDataResult {
  std::string dataset;
  int d = 0;
  std::vector<RealDataRow> rows;
};

namespace detail {

// seed sub-stream purposes
inline constexpr std::uint64_t kTrainStream = 1;
inline constexpr std::uint64_t kEvalStream = 2;
inline constexpr std::uint64_t kTrainBStream = 3;
inline constexpr std::uint64_t kSplitStream = 4;
inline constexpr std::uint64_t kValSplitStream = 5;

inline int resolve_threads(int requested) {
  int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("INTERPNN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) t = std::min(t, cap);
  }
  return std::max(1, t);
}

/// Runs fn(rep) for rep in [0, reps) on a worker pool. Every rep writes only
/// its own preallocated slot, so outputs do not depend on the thread count.
template <typename Fn>
void parallel_reps(int reps, int threads, Fn&& fn) {
  threads = std::min(threads, reps);
  if (threads <= 1) {
    for (int r = 0; r < reps; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) fn(r);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// One evaluation query against one training set, ranked once. Scores of the
/// interpolated-NN estimate are then available for every k = 1..k_max in one
/// O(k_max) pass per gamma: with weights proportional to R_i^{-gamma} the
/// R_{k+1} normalizer cancels, so score_k = sum_{i<=k} t_i y_i / sum t_i
/// with t_i = (R_i / R_1)^{-gamma} <= 1 (no overflow for any gamma).
class RankedQuery {
 public:
  RankedQuery(const LabeledDataset& train, std::span<const double> q, int k_max) {
    const NeighborList nl = brute_knn(train, q, k_max - 1);
    const auto k = static_cast<std::size_t>(k_max);
    y_.resize(k);
    prefix_y_.resize(k + 1, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      y_[i] = train.label(nl.indices[i]);
      prefix_y_[i + 1] = prefix_y_[i] + y_[i];
    }
    while (zeros_ < k_max && nl.distances[static_cast<std::size_t>(zeros_)] == 0.0) ++zeros_;
    if (zeros_ == 0) {
      logr_.resize(k);
      const double anchor = nl.distances[0];
      for (std::size_t i = 0; i < k; ++i) logr_[i] = std::log(nl.distances[i] / anchor);
    }
  }

  /// out[k-1] = estimate with the k nearest neighbors, k = 1..k_max.
  void scores(double gamma, std::span<double> out) const {
    const auto k_max = static_cast<int>(y_.size());
    if (gamma > 0.0 && zeros_ > 0) {
      // zero-distance neighbors absorb all mass in equal shares
      for (int k = 1; k <= k_max; ++k) {
        const int z = std::min(zeros_, k);
        out[k - 1] = prefix_y_[static_cast<std::size_t>(z)] / z;
      }
      return;
    }
    if (gamma == 0.0) {
      for (int k = 1; k <= k_max; ++k) out[k - 1] = prefix_y_[static_cast<std::size_t>(k)] / k;
      return;
    }
    double num = 0.0, den = 0.0;
    for (int k = 1; k <= k_max; ++k) {
      const double t = std::exp(-gamma * logr_[static_cast<std::size_t>(k - 1)]);
      num += t * y_[static_cast<std::size_t>(k - 1)];
      den += t;
      out[k - 1] = num / den;
    }
  }

 private:
  std::vector<double> y_;         // labels by neighbor rank
  std::vector<double> prefix_y_;  // prefix label sums
  std::vector<double> logr_;      // log(R_i / R_1), set when zeros_ == 0
  int zeros_ = 0;
};

// Accumulated over the evaluation queries of one repetition; [gamma][k-1].
struct SimTables {
  int k_max = 0;
  std::size_t n_gammas = 0;
  std::vector<double> mse;
  std::vector<double> regret;  // conditional regret |2 eta - 1| 1{ghat != g}

  SimTables(std::size_t gammas, int k)
      : k_max(k),
        n_gammas(gammas),
        mse(gammas * static_cast<std::size_t>(k), 0.0),
        regret(gammas * static_cast<std::size_t>(k), 0.0) {}

  [[nodiscard]] std::span<double> mse_row(std::size_t g) {
    return {mse.data() + g * static_cast<std::size_t>(k_max), static_cast<std::size_t>(k_max)};
  }
  [[nodiscard]] std::span<double> regret_row(std::size_t g) {
    return {regret.data() + g * static_cast<std::size_t>(k_max), static_cast<std::size_t>(k_max)};
  }
};

struct SimRepResult {
  std::vector<double> best_mse;     // per gamma: min over k
  std::vector<double> best_regret;  // per gamma: min over k
  std::vector<int> best_k_mse;      // per gamma: argmin over k (ties: smaller k)
};

inline std::pair<double, int> min_with_argmin(std::span<const double> row) {
  double best = row[0];
  int arg = 1;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] < best) {
      best = row[i];
      arg = static_cast<int>(i) + 1;
    }
  }
  return {best, arg};
}

/// Shared per-rep evaluation for the ratio and rate studies: draw a training
/// set and fresh queries, then fill per-(gamma, k) means of squared error
/// against eta and of conditional regret against the Bayes rule.
inline SimRepResult simulate_rep(const MixtureModel& model, int n, int n_test,
                                 std::span<const double> gammas, RngSeed train_seed,
                                 RngSeed eval_seed, int max_k) {
  const LabeledDataset train = sample(model, static_cast<std::size_t>(n), train_seed);
  const std::vector<Point> queries =
      sample_queries(model, static_cast<std::size_t>(n_test), eval_seed);
  const BayesOracle oracle(model);
  const int k_max = max_k > 0 ? std::min(max_k, n - 1) : n - 1;

  SimTables tables(gammas.size(), k_max);
  std::vector<double> scores(static_cast<std::size_t>(k_max));
  for (const Point& q : queries) {
    const RankedQuery ranked(train, q, k_max);
    const double eta_q = oracle.eta(q);
    const int bayes_q = threshold_class(eta_q);
    const double margin = std::abs(2.0 * eta_q - 1.0);
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      ranked.scores(gammas[g], scores);
      auto mse_row = tables.mse_row(g);
      auto regret_row = tables.regret_row(g);
      for (int k = 0; k < k_max; ++k) {
        const double err = scores[static_cast<std::size_t>(k)] - eta_q;
        mse_row[k] += err * err;
        if (threshold_class(scores[static_cast<std::size_t>(k)]) != bayes_q)
          regret_row[k] += margin;
      }
    }
  }

  SimRepResult result;
  result.best_mse.resize(gammas.size());
  result.best_regret.resize(gammas.size());
  result.best_k_mse.resize(gammas.size());
  const double inv_m = 1.0 / static_cast<double>(n_test);
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    const auto [mse_min, mse_arg] = min_with_argmin(tables.mse_row(g));
    const auto [reg_min, reg_arg] = min_with_argmin(tables.regret_row(g));
    result.best_mse[g] = mse_min * inv_m;
    result.best_regret[g] = reg_min * inv_m;
    result.best_k_mse[g] = mse_arg;
  }
  return result;
}

struct RatioStat {
  double ratio = 1.0;
  double se = 0.0;
};

/// Ratio of Monte-Carlo means with a delta-method standard error; numerator
/// and denominator come from the same repetitions, so the covariance term
/// matters. Identical inputs give ratio exactly 1 with zero error.
inline RatioStat ratio_of_means(std::span<const double> num, std::span<const double> den) {
  const double a = mean(num);
  const double b = mean(den);
  const auto m = static_cast<double>(num.size());
  RatioStat out{a / b, 0.0};
  if (num.size() < 2) return out;
  double va = 0.0, vb = 0.0, cab = 0.0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    va += (num[i] - a) * (num[i] - a);
    vb += (den[i] - b) * (den[i] - b);
    cab += (num[i] - a) * (den[i] - b);
  }
  const double scale = 1.0 / (m * (m - 1.0));
  va *= scale;
  vb *= scale;
  cab *= scale;
  const double rel = va / (a * a) + vb / (b * b) - 2.0 * cab / (a * b);
  out.se = std::abs(out.ratio) * std::sqrt(std::max(rel, 0.0));
  return out;
}

inline std::optional<double> theory_pr_or_na(int d, double gamma) {
  if (!(gamma >= 0.0 && gamma < static_cast<double>(d) / 3.0)) return std::nullopt;
  return pr(d, gamma);
}

inline void validate_common(const ExperimentConfig& cfg, Study expected) {
  if (cfg.study != expected) throw ConfigError("config built for a different study");
  if (cfg.d < 1) throw ConfigError("d must be >= 1");
  if (cfg.gamma_over_d_grid.empty()) throw ConfigError("gamma grid must not be empty");
  for (double g : cfg.gamma_over_d_grid)
    if (!(g >= 0.0)) throw ConfigError("gamma grid values must be >= 0");
  if (cfg.gamma_over_d_grid.front() != 0.0)
    throw ConfigError("gamma grid must start at 0 (the kNN reference point)");
  if (cfg.n_test < 1) throw ConfigError("n_test must be >= 1");
}

}  // namespace detail

/// Scaled reproduction of the performance-ratio experiment: per repetition,
/// train once and pick the optimal k per gamma on fresh evaluation draws;
/// aggregate means per gamma and divide by the gamma = 0 aggregate.
inline RatioCurve run_ratio_curve(const ExperimentConfig& cfg) {
  detail::validate_common(cfg, Study::kRatioCurve);
  if (cfg.n < 4) throw ConfigError("n must be >= 4");
  if (cfg.reps.regression < 1 || cfg.reps.classification < 1)
    throw ConfigError("repetition counts must be >= 1");

  const MixtureModel model{cfg.d};
  std::vector<double> gammas(cfg.gamma_over_d_grid.size());
  for (std::size_t g = 0; g < gammas.size(); ++g)
    gammas[g] = cfg.gamma_over_d_grid[g] * cfg.d;

  const int reps_total = std::max(cfg.reps.regression, cfg.reps.classification);
  std::vector<detail::SimRepResult> outcomes(static_cast<std::size_t>(reps_total));
  detail::parallel_reps(reps_total, detail::resolve_threads(cfg.threads), [&](int rep) {
    const auto r = static_cast<std::uint64_t>(rep);
    outcomes[static_cast<std::size_t>(rep)] = detail::simulate_rep(
        model, cfg.n, cfg.n_test, gammas, cfg.seed.substream(detail::kTrainStream, r),
        cfg.seed.substream(detail::kEvalStream, r), cfg.max_k);
  });

  RatioCurve curve{cfg.d, cfg.n, {}};
  const auto collect = [&](const std::string& metric, int reps,
                           auto field) {
    std::vector<double> base(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r)
      base[static_cast<std::size_t>(r)] = (outcomes[static_cast<std::size_t>(r)].*field)[0];
    std::vector<double> vals(static_cast<std::size_t>(reps));
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      for (int r = 0; r < reps; ++r)
        vals[static_cast<std::size_t>(r)] = (outcomes[static_cast<std::size_t>(r)].*field)[g];
      const auto stat = detail::ratio_of_means(vals, base);
      curve.points.push_back({gammas[g], cfg.gamma_over_d_grid[g], metric, stat.ratio, stat.se,
                              detail::theory_pr_or_na(cfg.d, gammas[g])});
    }
  };
  collect("mse", cfg.reps.regression, &detail::SimRepResult::best_mse);
  collect("regret", cfg.reps.classification, &detail::SimRepResult::best_regret);
  return curve;
}

namespace detail {

struct CisRepResult {
  std::vector<double> cis_optimal;  // per gamma, at the gamma-specific best k
  std::vector<double> cis_fixed;    // per gamma, at the gamma = 0 best k
};

inline CisRepResult cis_rep(const MixtureModel& model, const ExperimentConfig& cfg,
                            std::span<const double> gammas, int rep) {
  const auto r = static_cast<std::uint64_t>(rep);
  const LabeledDataset train_a = sample(model, static_cast<std::size_t>(cfg.n),
                                        cfg.seed.substream(kTrainStream, r));
  const LabeledDataset train_b =
      cfg.cis_identical_pairs
          ? sample(model, static_cast<std::size_t>(cfg.n), cfg.seed.substream(kTrainStream, r))
          : sample(model, static_cast<std::size_t>(cfg.n), cfg.seed.substream(kTrainBStream, r));
  const std::vector<Point> queries = sample_queries(
      model, static_cast<std::size_t>(cfg.n_test), cfg.seed.substream(kEvalStream, r));
  const BayesOracle oracle(model);
  const int k_max = cfg.max_k > 0 ? std::min(cfg.max_k, cfg.n - 1) : cfg.n - 1;

  const auto cells = gammas.size() * static_cast<std::size_t>(k_max);
  std::vector<double> disagree(cells, 0.0);  // [gamma][k-1]
  std::vector<double> objective(cells, 0.0); // mean conditional regret of the pair
  std::vector<double> scores_a(static_cast<std::size_t>(k_max));
  std::vector<double> scores_b(static_cast<std::size_t>(k_max));
  for (const Point& q : queries) {
    const RankedQuery ranked_a(train_a, q, k_max);
    const RankedQuery ranked_b(train_b, q, k_max);
    const double eta_q = oracle.eta(q);
    const int bayes_q = threshold_class(eta_q);
    const double margin = std::abs(2.0 * eta_q - 1.0);
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      ranked_a.scores(gammas[g], scores_a);
      ranked_b.scores(gammas[g], scores_b);
      double* dis = disagree.data() + g * static_cast<std::size_t>(k_max);
      double* obj = objective.data() + g * static_cast<std::size_t>(k_max);
      for (int k = 0; k < k_max; ++k) {
        const int ca = threshold_class(scores_a[static_cast<std::size_t>(k)]);
        const int cb = threshold_class(scores_b[static_cast<std::size_t>(k)]);
        if (ca != cb) dis[k] += 1.0;
        obj[k] += margin * (0.5 * ((ca != bayes_q) + (cb != bayes_q)));
      }
    }
  }

  CisRepResult result;
  result.cis_optimal.resize(gammas.size());
  result.cis_fixed.resize(gammas.size());
  const double inv_m = 1.0 / static_cast<double>(cfg.n_test);
  const std::span<const double> obj0{objective.data(), static_cast<std::size_t>(k_max)};
  const int k0 = min_with_argmin(obj0).second;
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    const std::span<const double> obj{objective.data() + g * static_cast<std::size_t>(k_max),
                                      static_cast<std::size_t>(k_max)};
    const int kg = min_with_argmin(obj).second;
    const double* dis = disagree.data() + g * static_cast<std::size_t>(k_max);
    result.cis_optimal[g] = dis[kg - 1] * inv_m;
    result.cis_fixed[g] = dis[k0 - 1] * inv_m;
  }
  return result;
}

}  // namespace detail

/// CIS experiment: per repetition two independent training sets are fitted
/// with the same scheme and evaluated for disagreement on shared queries,
/// both at the gamma-specific optimal k and at the fixed gamma = 0 optimum.
inline CisCurve run_cis_curve(const ExperimentConfig& cfg) {
  detail::validate_common(cfg, Study::kCisCurve);
  if (cfg.n < 4) throw ConfigError("n must be >= 4");
  if (cfg.reps.classification < 1) throw ConfigError("repetition count must be >= 1");

  const MixtureModel model{cfg.d};
  std::vector<double> gammas(cfg.gamma_over_d_grid.size());
  for (std::size_t g = 0; g < gammas.size(); ++g)
    gammas[g] = cfg.gamma_over_d_grid[g] * cfg.d;

  const int reps = cfg.reps.classification;
  std::vector<detail::CisRepResult> outcomes(static_cast<std::size_t>(reps));
  detail::parallel_reps(reps, detail::resolve_threads(cfg.threads), [&](int rep) {
    outcomes[static_cast<std::size_t>(rep)] = detail::cis_rep(model, cfg, gammas, rep);
  });

  CisCurve curve{cfg.d, cfg.n, {}, {}, {}};
  const auto collect = [&](const std::string& policy, auto field, std::vector<double>& levels) {
    std::vector<double> base(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r)
      base[static_cast<std::size_t>(r)] = (outcomes[static_cast<std::size_t>(r)].*field)[0];
    std::vector<double> vals(static_cast<std::size_t>(reps));
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      for (int r = 0; r < reps; ++r)
        vals[static_cast<std::size_t>(r)] = (outcomes[static_cast<std::size_t>(r)].*field)[g];
      const auto stat = detail::ratio_of_means(vals, base);
      const auto theory = detail::theory_pr_or_na(cfg.d, gammas[g]);
      curve.points.push_back({gammas[g], cfg.gamma_over_d_grid[g], policy, stat.ratio, stat.se,
                              theory ? std::optional<double>(std::sqrt(*theory)) : std::nullopt});
      levels.push_back(mean(vals));
    }
  };
  collect("optimal", &detail::CisRepResult::cis_optimal, curve.mean_cis_optimal);
  collect("fixed", &detail::CisRepResult::cis_fixed, curve.mean_cis_fixed);
  return curve;
}

/// Convergence-rate study: optimal k and optimal MSE per (n, gamma), with a
/// least-squares log-log slope of MSE against n for each gamma.
inline RateCheckResult run_rate_check(const ExperimentConfig& cfg) {
  detail::validate_common(cfg, Study::kRateCheck);
  if (cfg.n_grid.empty()) throw ConfigError("n grid must not be empty");
  for (int n : cfg.n_grid)
    if (n < 4) throw ConfigError("n grid values must be >= 4");
  if (cfg.reps.regression < 1) throw ConfigError("repetition count must be >= 1");

  const MixtureModel model{cfg.d};
  std::vector<double> gammas(cfg.gamma_over_d_grid.size());
  for (std::size_t g = 0; g < gammas.size(); ++g)
    gammas[g] = cfg.gamma_over_d_grid[g] * cfg.d;
  const int reps = cfg.reps.regression;
  const int threads = detail::resolve_threads(cfg.threads);

  RateCheckResult result;
  result.gammas = gammas;
  result.best_k_at_max_n.assign(gammas.size(), std::vector<int>(static_cast<std::size_t>(reps)));
  const int n_max = *std::max_element(cfg.n_grid.begin(), cfg.n_grid.end());

  std::vector<std::vector<double>> mean_mse(gammas.size());
  for (std::size_t ni = 0; ni < cfg.n_grid.size(); ++ni) {
    const int n = cfg.n_grid[ni];
    std::vector<detail::SimRepResult> outcomes(static_cast<std::size_t>(reps));
    detail::parallel_reps(reps, threads, [&](int rep) {
      // stream ids disjoint across the n grid
      const std::uint64_t r = static_cast<std::uint64_t>(rep) +
                              (static_cast<std::uint64_t>(ni) << 32);
      outcomes[static_cast<std::size_t>(rep)] = detail::simulate_rep(
          model, n, cfg.n_test, gammas, cfg.seed.substream(detail::kTrainStream, r),
          cfg.seed.substream(detail::kEvalStream, r), cfg.max_k);
    });
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      std::vector<double> mses(static_cast<std::size_t>(reps));
      std::vector<double> ks(static_cast<std::size_t>(reps));
      for (int r = 0; r < reps; ++r) {
        mses[static_cast<std::size_t>(r)] = outcomes[static_cast<std::size_t>(r)].best_mse[g];
        ks[static_cast<std::size_t>(r)] =
            static_cast<double>(outcomes[static_cast<std::size_t>(r)].best_k_mse[g]);
        if (n == n_max)
          result.best_k_at_max_n[g][static_cast<std::size_t>(r)] =
              outcomes[static_cast<std::size_t>(r)].best_k_mse[g];
      }
      result.rows.push_back({cfg.d, gammas[g], n, mean(ks), mean(mses), stderr_of_mean(mses)});
      mean_mse[g].push_back(mean(mses));
    }
  }

  // slope of log(mean MSE) on log(n), per gamma
  result.slopes.resize(gammas.size());
  std::vector<double> log_n(cfg.n_grid.size());
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) log_n[i] = std::log(cfg.n_grid[i]);
  const double lx = mean(log_n);
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    std::vector<double> log_y(mean_mse[g].size());
    for (std::size_t i = 0; i < log_y.size(); ++i) log_y[i] = std::log(mean_mse[g][i]);
    const double ly = mean(log_y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      sxy += (log_n[i] - lx) * (log_y[i] - ly);
      sxx += (log_n[i] - lx) * (log_n[i] - lx);
    }
    result.slopes[g] = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return result;
}

namespace detail {

/// Per-(gamma, k) misclassification counts of one training set against
/// labeled queries; reuses the ranked-query score walk.
inline std::vector<double> misclass_table(const LabeledDataset& train, const LabeledDataset& test,
                                          std::span<const double> gammas, int k_max) {
  std::vector<double> table(gammas.size() * static_cast<std::size_t>(k_max), 0.0);
  std::vector<double> scores(static_cast<std::size_t>(k_max));
  for (std::size_t i = 0; i < test.size(); ++i) {
    const RankedQuery ranked(train, test.point(i), k_max);
    const auto y = static_cast<int>(test.label(i));
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      ranked.scores(gammas[g], scores);
      double* row = table.data() + g * static_cast<std::size_t>(k_max);
      for (int k = 0; k < k_max; ++k)
        if (threshold_class(scores[static_cast<std::size_t>(k)]) != y) row[k] += 1.0;
    }
  }
  return table;
}

}  // namespace detail

/// Real-data benchmark: repeated train/test splits, k selected per gamma on
/// a validation split of the training part, test error reported per gamma.
/// Splits are seeded from the dataset content hash, so shuffled input rows
/// produce identical output.
inline RealDataResult run_real_data(const LabeledDataset& raw, const std::string& dataset_name,
                                    const ExperimentConfig& cfg) {
  detail::validate_common(cfg, Study::kRealData);
  if (raw.task() != Task::kClassification)
    throw TaskMismatchError("real-data benchmark expects a classification dataset");
  const ValidationReport report = validate_dataset(raw);
  if (!report.ok()) throw Error("invalid dataset: " + report.to_string());
  if (cfg.reps.classification < 1) throw ConfigError("repetition count must be >= 1");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) ||
      !(cfg.validation_fraction > 0.0 && cfg.validation_fraction < 1.0))
    throw ConfigError("fractions must lie in (0,1)");

  const LabeledDataset ds = canonical_sorted(raw);
  const RngSeed base{detail::mix64(cfg.seed.seed ^ dataset_content_hash(raw)), cfg.seed.stream};
  const int d = ds.dim();
  std::vector<double> gammas(cfg.gamma_over_d_grid.size());
  for (std::size_t g = 0; g < gammas.size(); ++g) gammas[g] = cfg.gamma_over_d_grid[g] * d;

  const int reps = cfg.reps.classification;
  std::vector<std::vector<double>> errors(static_cast<std::size_t>(reps));
  detail::parallel_reps(reps, detail::resolve_threads(cfg.threads), [&](int rep) {
    const auto r = static_cast<std::uint64_t>(rep);
    const auto [train, test] =
        split_train_test(ds, cfg.train_fraction, base.substream(detail::kSplitStream, r));
    const auto [core, val] = split_train_test(train, 1.0 - cfg.validation_fraction,
                                              base.substream(detail::kValSplitStream, r));
    const int k_max_sel = cfg.max_k > 0
                              ? std::min(cfg.max_k, static_cast<int>(core.size()) - 1)
                              : static_cast<int>(core.size()) - 1;
    const auto val_table = detail::misclass_table(core, val, gammas, k_max_sel);
    const int k_max_test = cfg.max_k > 0
                               ? std::min(cfg.max_k, static_cast<int>(train.size()) - 1)
                               : static_cast<int>(train.size()) - 1;
    const auto test_table = detail::misclass_table(train, test, gammas, k_max_test);

    std::vector<double> err(gammas.size());
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      const std::span<const double> vrow{val_table.data() + g * static_cast<std::size_t>(k_max_sel),
                                         static_cast<std::size_t>(k_max_sel)};
      const int k_star = std::min(detail::min_with_argmin(vrow).second, k_max_test);
      err[g] = test_table[g * static_cast<std::size_t>(k_max_test) +
                          static_cast<std::size_t>(k_star - 1)] /
               static_cast<double>(test.size());
    }
    errors[static_cast<std::size_t>(rep)] = std::move(err);
  });

  RealDataResult result{dataset_name, d, {}};
  std::vector<double> vals(static_cast<std::size_t>(reps));
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    for (int r = 0; r < reps; ++r)
      vals[static_cast<std::size_t>(r)] = errors[static_cast<std::size_t>(r)][g];
    result.rows.push_back({cfg.gamma_over_d_grid[g], mean(vals), stderr_of_mean(vals), false});
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < result.rows.size(); ++g)
    if (result.rows[g].mean_error < result.rows[best].mean_error) best = g;
  result.rows[best].best = true;
  return result;
}

inline RealDataResult run_real_data(const std::string& csv_path, const std::string& label_column,
                                    const std::string& dataset_name, const ExperimentConfig& cfg) {
  return run_real_data(load_csv(csv_path, label_column, Task::kClassification), dataset_name, cfg);
}

// ---- CSV emission (schema-exact headers) ----

inline std::string to_csv(const RatioCurve& curve) {
  std::string out = "d,n,gamma,gamma_over_d,metric,sim_ratio,stderr,theory_pr\n";
  for (const auto& p : curve.points) {
    out += std::to_string(curve.d) + "," + std::to_string(curve.n) + "," +
           format_double(p.gamma) + "," + format_double(p.gamma_over_d) + "," + p.metric + "," +
           format_double(p.sim_ratio) + "," + format_double(p.std_error) + "," +
           (p.theory_pr ? format_double(*p.theory_pr) : "NA") + "\n";
  }
  return out;
}

inline std::string to_csv(const CisCurve& curve) {
  std::string out = "d,n,gamma,gamma_over_d,k_policy,sim_cis_ratio,stderr,theory_sqrt_pr\n";
  for (const auto& p : curve.points) {
    out += std::to_string(curve.d) + "," + std::to_string(curve.n) + "," +
           format_double(p.gamma) + "," + format_double(p.gamma_over_d) + "," + p.k_policy + "," +
           format_double(p.sim_ratio) + "," + format_double(p.std_error) + "," +
           (p.theory_sqrt_pr ? format_double(*p.theory_sqrt_pr) : "NA") + "\n";
  }
  return out;
}

inline std::string to_csv(const RateCheckResult& result) {
  std::string out = "d,gamma,n,best_k,best_mse,stderr\n";
  for (const auto& r : result.rows) {
    out += std::to_string(r.d) + "," + format_double(r.gamma) + "," + std::to_string(r.n) + "," +
           format_double(r.best_k) + "," + format_double(r.best_mse) + "," +
           format_double(r.std_error) + "\n";
  }
  return out;
}

inline std::string to_csv(const RealDataResult& result) {
  std::string out = "dataset,d,gamma_over_d,mean_error,stderr,best_flag\n";
  for (const auto& r : result.rows) {
    out += result.dataset + "," + std::to_string(result.d) + "," + format_double(r.gamma_over_d) +
           "," + format_double(r.mean_error) + "," + format_double(r.std_error) + "," +
           (r.best ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace interpnn
