#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "interpnn/core.hpp"
#include "interpnn/estimator.hpp"
#include "interpnn/random.hpp"

namespace interpnn {

/// The two-class benchmark model: equal priors, independent coordinates,
/// each coordinate an equal mixture of two normals,
///   class 0: 0.5 N(0, 1)   + 0.5 N(3, 2)
///   class 1: 0.5 N(1.5, 1) + 0.5 N(4.5, 2)
/// (second parameter is the variance).
struct MixtureModel {
  int d = 2;

  static constexpr double kMean0A = 0.0, kMean0B = 3.0;
  static constexpr double kMean1A = 1.5, kMean1B = 4.5;
  static constexpr double kVarA = 1.0, kVarB = 2.0;
};

namespace detail {

inline double log_normal_pdf(double x, double mean, double variance) {
  const double z = x - mean;
  return -0.5 * (std::log(2.0 * M_PI * variance) + z * z / variance);
}

// log(0.5 exp(a) + 0.5 exp(b)) without underflow
inline double log_half_sum_exp(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi)) - std::log(2.0);
}

inline double log_coord_density(double x, bool class1) {
  const double mean_a = class1 ? MixtureModel::kMean1A : MixtureModel::kMean0A;
  const double mean_b = class1 ? MixtureModel::kMean1B : MixtureModel::kMean0B;
  return log_half_sum_exp(log_normal_pdf(x, mean_a, MixtureModel::kVarA),
                          log_normal_pdf(x, mean_b, MixtureModel::kVarB));
}

}  // namespace detail

/// Closed-form posterior and Bayes rule for the mixture model. All density
/// work happens in log space, so large d cannot underflow.
class BayesOracle {
 public:
  explicit BayesOracle(MixtureModel model) : model_(model) {
    if (model_.d < 1) throw std::invalid_argument("dimension must be >= 1");
  }

  /// eta(x) = P(Y=1 | X=x) = f1(x) / (f0(x) + f1(x)) under equal priors.
  [[nodiscard]] double eta(std::span<const double> q) const {
    check_dim(q);
    double log_ratio = 0.0;  // log f0 - log f1
    for (double x : q)
      log_ratio += detail::log_coord_density(x, false) - detail::log_coord_density(x, true);
    return 1.0 / (1.0 + std::exp(log_ratio));
  }

  /// Bayes classifier 1{eta > 1/2}; the boundary maps to 0 like the
  /// estimator's threshold.
  [[nodiscard]] int classify(std::span<const double> q) const { return threshold_class(eta(q)); }

  [[nodiscard]] const MixtureModel& model() const { return model_; }

 private:
  void check_dim(std::span<const double> q) const {
    if (static_cast<int>(q.size()) != model_.d)
      throw DimensionMismatchError("query dimension " + std::to_string(q.size()) +
                                   " != model dimension " + std::to_string(model_.d));
  }

  MixtureModel model_;
};

/// n iid draws from the joint law: Y ~ Bernoulli(1/2), each coordinate from
/// the class mixture with a fresh Bernoulli(1/2) component choice.
inline LabeledDataset sample(const MixtureModel& model, std::size_t n, RngSeed seed) {
  if (model.d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (n < 1) throw std::invalid_argument("need n >= 1 draws");
  Rng rng(seed);
  LabeledDataset ds(Task::kClassification, model.d);
  std::vector<double> point(static_cast<std::size_t>(model.d));
  for (std::size_t i = 0; i < n; ++i) {
    const bool class1 = rng.next_bernoulli(0.5);
    for (int j = 0; j < model.d; ++j) {
      const bool second = rng.next_bernoulli(0.5);
      const double mean = class1 ? (second ? MixtureModel::kMean1B : MixtureModel::kMean1A)
                                 : (second ? MixtureModel::kMean0B : MixtureModel::kMean0A);
      const double sd = std::sqrt(second ? MixtureModel::kVarB : MixtureModel::kVarA);
      point[static_cast<std::size_t>(j)] = rng.next_normal(mean, sd);
    }
    ds.add(point, class1 ? 1.0 : 0.0);
  }
  return ds;
}

/// Feature draws only (labels integrated out); used for evaluation queries.
inline std::vector<Point> sample_queries(const MixtureModel& model, std::size_t n, RngSeed seed) {
  const LabeledDataset ds = sample(model, n, seed);
  std::vector<Point> queries(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = ds.point(i);
    queries[i].assign(p.begin(), p.end());
  }
  return queries;
}

/// Monte-Carlo Bayes risk E[min(eta, 1-eta)] over fresh feature draws. Using
/// the conditional expectation instead of sampled labels halves the variance
/// for the same draw count.
inline EvalReport bayes_risk(const BayesOracle& oracle, std::size_t n_mc, RngSeed seed) {
  if (n_mc < 1) throw std::invalid_argument("need n_mc >= 1 draws");
  const LabeledDataset draws = sample(oracle.model(), n_mc, seed);
  std::vector<double> vals(n_mc);
  for (std::size_t i = 0; i < n_mc; ++i) {
    const double e = oracle.eta(draws.point(i));
    vals[i] = std::min(e, 1.0 - e);
  }
  return {Metric::kMisclassRate, mean(vals), stderr_of_mean(vals), n_mc};
}

}  // namespace interpnn
