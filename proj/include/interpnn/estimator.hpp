#pragma once

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "interpnn/core.hpp"
#include "interpnn/neighbors.hpp"
#include "interpnn/weighting.hpp"

namespace interpnn {

enum class Metric { kMse, kMisclassRate, kRegret, kCis };

struct EvalReport {
  Metric metric = Metric::kMse;
  double value = 0.0;
  double std_error = 0.0;  // Monte-Carlo standard error of the value
  std::size_t n_eval = 0;
};

/// Classification threshold shared by the estimator and the Bayes oracle:
/// a score of exactly 1/2 maps to class 0.
inline int threshold_class(double score) { return score > 0.5 ? 1 : 0; }

/// Weighted label average over the k nearest neighbors described by a
/// (distances, indices) pair of k+1 entries. `scratch` must hold k doubles.
inline double predict_score(std::span<const double> distances,
                            std::span<const std::uint32_t> indices,
                            std::span<const double> labels, const WeightScheme& scheme,
                            std::span<double> scratch) {
  compute_weights(scheme, distances, scratch);
  double score = 0.0;
  for (std::size_t i = 0; i < scratch.size(); ++i) score += scratch[i] * labels[indices[i]];
  return score;
}

/// A trained interpolated-NN predictor: training data, search index, weight
/// scheme and neighbor count. Immutable; predictions may run concurrently.
class FittedModel {
 public:
  FittedModel(std::shared_ptr<const LabeledDataset> train,
              std::shared_ptr<const NeighborIndex> index, WeightScheme scheme, int k)
      : train_(std::move(train)), index_(std::move(index)), scheme_(scheme), k_(k) {
    if (k_ < 1) throw std::invalid_argument("k must be >= 1");
    if (static_cast<std::size_t>(k_) + 1 > train_->size())
      throw KTooLargeError("k+1 exceeds training size");
  }

  static FittedModel fit(LabeledDataset train, WeightScheme scheme, int k) {
    auto ds = std::make_shared<const LabeledDataset>(std::move(train));
    auto index = std::make_shared<const NeighborIndex>(*ds);
    return FittedModel(std::move(ds), std::move(index), scheme, k);
  }

  [[nodiscard]] double predict_regression(std::span<const double> q) const {
    const NeighborList nl = index_->query(q, k_);
    std::vector<double> scratch(static_cast<std::size_t>(k_));
    return predict_score(nl.distances, nl.indices, train_->labels(), scheme_, scratch);
  }

  [[nodiscard]] int predict_class(std::span<const double> q) const {
    return threshold_class(predict_regression(q));
  }

  [[nodiscard]] const LabeledDataset& train() const { return *train_; }
  [[nodiscard]] std::shared_ptr<const LabeledDataset> train_ptr() const { return train_; }
  [[nodiscard]] std::shared_ptr<const NeighborIndex> index_ptr() const { return index_; }
  [[nodiscard]] const WeightScheme& scheme() const { return scheme_; }
  [[nodiscard]] int k() const { return k_; }

 private:
  std::shared_ptr<const LabeledDataset> train_;
  std::shared_ptr<const NeighborIndex> index_;
  WeightScheme scheme_;
  int k_;
};

/// Mean squared error against the noiseless regression function, not against
/// noisy labels.
inline EvalReport eval_mse(const FittedModel& m,
                           const std::function<double(std::span<const double>)>& truth,
                           std::span<const Point> queries) {
  if (queries.empty()) throw EmptyQuerySetError("eval_mse needs at least one query");
  std::vector<double> sq(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const double err = m.predict_regression(queries[i]) - truth(queries[i]);
    sq[i] = err * err;
  }
  return {Metric::kMse, mean(sq), stderr_of_mean(sq), queries.size()};
}

inline EvalReport eval_misclass(const FittedModel& m, const LabeledDataset& test) {
  if (test.size() == 0) throw EmptyQuerySetError("eval_misclass needs at least one draw");
  if (m.train().task() != Task::kClassification || test.task() != Task::kClassification)
    throw TaskMismatchError("classification task required");
  std::vector<double> err(test.size());
  for (std::size_t i = 0; i < test.size(); ++i)
    err[i] = m.predict_class(test.point(i)) != static_cast<int>(test.label(i)) ? 1.0 : 0.0;
  return {Metric::kMisclassRate, mean(err), stderr_of_mean(err), test.size()};
}

/// Paired regret estimate: (empirical error of the model) minus (empirical
/// error of the Bayes rule) on the same labeled draws. May come out slightly
/// negative by Monte-Carlo noise; it is reported as-is.
inline EvalReport eval_regret(const FittedModel& m,
                              const std::function<int(std::span<const double>)>& bayes,
                              const LabeledDataset& test_draws) {
  if (test_draws.size() == 0) throw EmptyQuerySetError("eval_regret needs at least one draw");
  if (m.train().task() != Task::kClassification || test_draws.task() != Task::kClassification)
    throw TaskMismatchError("classification task required");
  std::vector<double> diff(test_draws.size());
  for (std::size_t i = 0; i < test_draws.size(); ++i) {
    const auto y = static_cast<int>(test_draws.label(i));
    const int model_err = m.predict_class(test_draws.point(i)) != y ? 1 : 0;
    const int bayes_err = bayes(test_draws.point(i)) != y ? 1 : 0;
    diff[i] = static_cast<double>(model_err - bayes_err);
  }
  return {Metric::kRegret, mean(diff), stderr_of_mean(diff), test_draws.size()};
}

/// Empirical classification instability: the fraction of queries on which
/// two models trained on independent same-size samples disagree. Both models
/// must share the weight scheme and k.
inline EvalReport eval_cis(const FittedModel& a, const FittedModel& b,
                           std::span<const Point> queries) {
  if (queries.empty()) throw EmptyQuerySetError("eval_cis needs at least one query");
  if (!(a.scheme() == b.scheme()) || a.k() != b.k())
    throw SchemeMismatchError("eval_cis requires identical (scheme, k)");
  std::vector<double> disagree(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    disagree[i] = a.predict_class(queries[i]) != b.predict_class(queries[i]) ? 1.0 : 0.0;
  return {Metric::kCis, mean(disagree), stderr_of_mean(disagree), queries.size()};
}

struct KSearchResult {
  int k = 1;
  EvalReport report;
};

/// Minimizes an evaluation objective over a k grid; ties go to the smaller k.
/// The search index is built once and shared across all candidate models.
template <typename Objective>
KSearchResult optimize_k(std::shared_ptr<const LabeledDataset> train, const WeightScheme& scheme,
                         std::span<const int> k_grid, Objective&& objective) {
  if (k_grid.empty()) throw EmptyGridError("optimize_k needs a nonempty k grid");
  auto index = std::make_shared<const NeighborIndex>(*train);
  std::vector<int> ks(k_grid.begin(), k_grid.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  KSearchResult best;
  bool first = true;
  for (int k : ks) {
    FittedModel model(train, index, scheme, k);
    const EvalReport report = objective(model);
    if (first || report.value < best.report.value) {
      best = {k, report};
      first = false;
    }
  }
  return best;
}

/// Geometric k grid covering [1, k_max] with the given ratio.
inline std::vector<int> default_k_grid(int k_max, double ratio = 1.15) {
  std::vector<int> grid;
  for (int k = 1; k <= k_max;) {
    grid.push_back(k);
    k = std::max(k + 1, static_cast<int>(std::lround(k * ratio)));
  }
  return grid;
}

}  // namespace interpnn
