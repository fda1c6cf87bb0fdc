#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "interpnn/core.hpp"
#include "interpnn/neighbors.hpp"

namespace interpnn {

/// Plain k-nearest-neighbor averaging: every neighbor gets 1/k.
struct Uniform {
  friend bool operator==(const Uniform&, const Uniform&) = default;
};

/// Distance-ratio weights proportional to (R_i / R_{k+1})^{-gamma}. gamma = 0
/// recovers Uniform; growing gamma concentrates mass on closer neighbors and
/// makes the fit interpolate the training data.
struct Interpolated {
  double gamma = 0.0;
  friend bool operator==(const Interpolated&, const Interpolated&) = default;
};

/// Rank-based optimal weights of the OWNN scheme; depends on the feature
/// dimension and the neighbor count only, never on distances.
struct OwnnRank {
  int dim = 1;
  friend bool operator==(const OwnnRank&, const OwnnRank&) = default;
};

using WeightScheme = std::variant<Uniform, Interpolated, OwnnRank>;

struct WeightVector {
  std::vector<double> weights;  // k entries, nonnegative, summing to 1
};

inline void uniform_weights(std::span<double> out) {
  const double w = 1.0 / static_cast<double>(out.size());
  std::fill(out.begin(), out.end(), w);
}

/// Interpolated weights for the k nearest neighbors given k+1 ascending
/// distances. Computed in log space with a log-sum-exp normalization so that
/// large gamma or tiny distance ratios cannot overflow.
///
/// Exact-match rule: for gamma > 0, zero-distance neighbors absorb all the
/// mass in equal shares (the interpolation limit); at gamma = 0 the weights
/// stay uniform. If even R_{k+1} is 0 every distance is 0 and the equal
/// split covers all k neighbors.
inline void interpolated_weights(std::span<const double> distances, double gamma,
                                 std::span<double> out) {
  const std::size_t k = out.size();
  if (distances.size() != k + 1) throw std::invalid_argument("need k+1 distances for k weights");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be >= 0");
  if (gamma == 0.0) {
    uniform_weights(out);
    return;
  }
  const double radius = distances[k];
  std::size_t zeros = 0;
  while (zeros < k && distances[zeros] == 0.0) ++zeros;
  if (zeros > 0 || radius == 0.0) {
    const std::size_t covered = zeros > 0 ? zeros : k;
    for (std::size_t i = 0; i < k; ++i)
      out[i] = i < covered ? 1.0 / static_cast<double>(covered) : 0.0;
    return;
  }
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = -gamma * std::log(distances[i] / radius);
    max_logit = std::max(max_logit, out[i]);
  }
  double norm = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    out[i] = std::exp(out[i] - max_logit);
    norm += out[i];
  }
  for (std::size_t i = 0; i < k; ++i) out[i] /= norm;
}

/// Closed-form OWNN rank weights
///   w_i = (1/k) * [1 + d/2 - d/(2 k^{2/d}) * (i^{1+2/d} - (i-1)^{1+2/d})],
/// clipped at zero and renormalized. No weight exceeds (1 + d/2)/k.
inline void ownn_weights(int dim, std::span<double> out) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  const auto k = static_cast<double>(out.size());
  const double a = 1.0 + dim / 2.0;
  const double b = dim / (2.0 * std::pow(k, 2.0 / dim));
  const double e = 1.0 + 2.0 / dim;
  double prev = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double cur = std::pow(static_cast<double>(i + 1), e);
    out[i] = std::max((a - b * (cur - prev)) / k, 0.0);
    sum += out[i];
    prev = cur;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= sum;
}

inline void compute_weights(const WeightScheme& scheme, std::span<const double> distances,
                            std::span<double> out) {
  if (const auto* interp = std::get_if<Interpolated>(&scheme)) {
    interpolated_weights(distances, interp->gamma, out);
  } else if (const auto* ownn = std::get_if<OwnnRank>(&scheme)) {
    ownn_weights(ownn->dim, out);
  } else {
    uniform_weights(out);
  }
}

inline WeightVector compute_weights(const WeightScheme& scheme, const NeighborList& nl) {
  if (nl.k() < 1) throw std::invalid_argument("need at least one neighbor to weight");
  WeightVector wv;
  wv.weights.resize(static_cast<std::size_t>(nl.k()));
  compute_weights(scheme, nl.distances, wv.weights);
  return wv;
}

}  // namespace interpnn
