#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "interpnn/core.hpp"
#include "interpnn/neighbors.hpp"
#include "interpnn/random.hpp"

namespace interpnn {

/// Dimension and interpolation level in the asymptotic regime gamma < d/3.
struct AsymptoticParams {
  int d = 1;
  double gamma = 0.0;
};

namespace detail {

inline void require_regime(int d, double gamma, double divisor) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (!(gamma >= 0.0 && gamma < static_cast<double>(d) / divisor))
    throw OutOfRegimeError("gamma = " + std::to_string(gamma) + " outside [0, d/" +
                           std::to_string(static_cast<int>(divisor)) + ") for d = " +
                           std::to_string(d));
}

// Shared bases of the closed forms. Both equal exactly 1.0 when gamma == 0.
inline double variance_inflation(double d, double gamma) {
  return 1.0 + gamma * gamma / (d * (d - 2.0 * gamma));
}
inline double bias_deflation(double d, double gamma) {
  return ((d - gamma) * (d + 2.0)) / ((d + 2.0 - gamma) * d);
}

}  // namespace detail

/// Asymptotic performance ratio of optimally tuned interpolated-NN risk to
/// optimally tuned kNN risk,
///   PR(d, gamma) = (1 + g^2/(d(d-2g)))^{4/(d+4)}
///                  * ((d-g)^2/(d+2-g)^2 * (d+2)^2/d^2)^{d/(d+4)}.
/// Distribution-free; equals 1 at gamma = 0 and is U-shaped on [0, d/3).
inline double pr(int d, double gamma) {
  detail::require_regime(d, gamma, 3.0);
  const auto dd = static_cast<double>(d);
  return std::pow(detail::variance_inflation(dd, gamma), 4.0 / (dd + 4.0)) *
         std::pow(detail::bias_deflation(dd, gamma), 2.0 * dd / (dd + 4.0));
}

inline double pr(AsymptoticParams p) { return pr(p.d, p.gamma); }

/// The largest interpolation level with PR(d, gamma) <= 1: the unique root
/// of PR = 1 inside (0, d/3) for d <= 3, and the regime edge d/3 for d >= 4
/// (PR stays below 1 on the whole open interval there).
inline double gamma_d(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  const double edge = static_cast<double>(d) / 3.0;
  if (d >= 4) return edge;
  double lo = 1e-9;
  double hi = edge - 1e-9;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (pr(d, mid) < 1.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-16 * edge) break;
  }
  return 0.5 * (lo + hi);
}

/// Limit of k_opt(gamma) / k_opt(0); exceeds 1 for gamma in (0, d/3), i.e.
/// interpolation wants slightly more neighbors.
inline double k_ratio(int d, double gamma) {
  detail::require_regime(d, gamma, 3.0);
  const auto dd = static_cast<double>(d);
  const double base = ((dd + 2.0 - gamma) * (dd + 2.0 - gamma) * (dd * dd)) /
                      ((dd * (dd - 2.0 * gamma)) * ((dd + 2.0) * (dd + 2.0)));
  return std::pow(base, dd / (dd + 4.0));
}

inline double k_ratio(AsymptoticParams p) { return k_ratio(p.d, p.gamma); }

/// CIS ratio of interpolated-NN to kNN when both use the same k:
/// sqrt(1 + g^2/(d(d-2g))), strictly above 1 for gamma > 0.
inline double cis_ratio_same_k(int d, double gamma) {
  detail::require_regime(d, gamma, 3.0);
  return std::sqrt(detail::variance_inflation(static_cast<double>(d), gamma));
}

inline double cis_ratio_same_k(AsymptoticParams p) { return cis_ratio_same_k(p.d, p.gamma); }

/// CIS ratio when each scheme runs at its own optimal k; squares to PR.
inline double cis_ratio_opt_k(int d, double gamma) { return std::sqrt(pr(d, gamma)); }

inline double cis_ratio_opt_k(AsymptoticParams p) { return cis_ratio_opt_k(p.d, p.gamma); }

/// Risk ratio of OWNN (at its optimal k) to interpolated-NN (at its optimal
/// k). Below 1 on the whole regime and tending to 1 as d grows.
inline double ownn_ratio(int d, double gamma) {
  detail::require_regime(d, gamma, 3.0);
  const auto dd = static_cast<double>(d);
  const double c = std::pow(2.0, 4.0 / (dd + 4.0)) *
                   std::pow((dd + 2.0) / (dd + 4.0), (2.0 * dd + 4.0) / (dd + 4.0));
  return c * std::pow(detail::variance_inflation(dd, gamma), -4.0 / (dd + 4.0)) *
         std::pow(detail::bias_deflation(dd, gamma), -2.0 * dd / (dd + 4.0));
}

inline double ownn_ratio(AsymptoticParams p) { return ownn_ratio(p.d, p.gamma); }

/// Closed-form limits of the neighbor distance-ratio moments for uniform
/// points in a ball:
///   m1 = E(R_i/R_{k+1})^{-gamma}        -> d/(d-gamma)
///   m2 = E(R_i/R_{k+1})^{-2 gamma}      -> d/(d-2 gamma)
///   m1r2_coeff: coefficient d/(d+2-gamma) in E(R_i/R_{k+1})^{-gamma} R_i^2.
/// m2 needs gamma < d/2; the stricter d/3 bound applies elsewhere.
struct MomentLimits {
  double m1 = 1.0;
  double m2 = 1.0;
  double m1r2_coeff = 0.0;
};

inline MomentLimits moment_limits(int d, double gamma) {
  detail::require_regime(d, gamma, 2.0);
  const auto dd = static_cast<double>(d);
  return {dd / (dd - gamma), dd / (dd - 2.0 * gamma), dd / (dd + 2.0 - gamma)};
}

inline MomentLimits moment_limits(AsymptoticParams p) { return moment_limits(p.d, p.gamma); }

struct MomentCheck {
  double m1_hat = 0.0;
  double m1_se = 0.0;
  double m2_hat = 0.0;
  double m2_se = 0.0;
};

/// Monte-Carlo verification of the moment limits: draws n uniform points in
/// the unit d-ball, takes the k+1 smallest distances to the center, and
/// averages (R_i/R_{k+1})^{-gamma} and (R_i/R_{k+1})^{-2 gamma} over the k
/// neighbors and over repetitions.
inline MomentCheck empirical_moment_check(int d, double gamma, int k, int n, int reps,
                                          RngSeed seed) {
  detail::require_regime(d, gamma, 3.0);
  if (k < 1 || n < k + 1 || reps < 1) throw std::invalid_argument("need 1 <= k < n, reps >= 1");
  std::vector<double> m1(reps), m2(reps);
  std::vector<double> point(d), origin(d, 0.0), d2(n);
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(seed.substream(static_cast<std::uint64_t>(rep)));
    for (int i = 0; i < n; ++i) {
      // Uniform point in the unit ball: normal direction, radius U^{1/d}.
      double norm2 = 0.0;
      for (int j = 0; j < d; ++j) {
        point[j] = rng.next_normal();
        norm2 += point[j] * point[j];
      }
      const double scale = std::pow(rng.next_unit(), 1.0 / d) / std::sqrt(norm2);
      for (int j = 0; j < d; ++j) point[j] *= scale;
      d2[i] = squared_distance(point, origin);
    }
    std::nth_element(d2.begin(), d2.begin() + k, d2.end());
    std::sort(d2.begin(), d2.begin() + k + 1);
    const double rk1 = std::sqrt(d2[k]);
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < k; ++i) {
      const double u = std::sqrt(d2[i]) / rk1;
      const double t = std::pow(u, -gamma);
      s1 += t;
      s2 += t * t;
    }
    m1[rep] = s1 / k;
    m2[rep] = s2 / k;
  }
  return {mean(m1), stderr_of_mean(m1), mean(m2), stderr_of_mean(m2)};
}

}  // namespace interpnn
