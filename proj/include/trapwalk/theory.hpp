#pragma once

#include <cstdint>
#include <vector>

#include "trapwalk/env.hpp"
#include "trapwalk/estimate.hpp"

namespace trapwalk {

struct ExponentInput {
  int d = 2;
  double alpha = 2.0;
  double gamma = 1.0;

  ExponentInput() = default;
  /// Throws std::invalid_argument unless d >= 1, alpha, gamma > 0 and
  /// alpha + gamma - d > 0.
  ExponentInput(int d, double alpha, double gamma);
};

/// 1/(alpha - d + 1) when gamma <= alpha - d, else 3/(3 + alpha + 2 gamma - d).
double bar_xi(const ExponentInput& in);

/// max(bar_xi, 1/2), the lower bound on the volume exponent.
double xi_lower_bound(const ExponentInput& in);

struct Feasibility {
  bool cost = false;     // ((d+1-alpha-2 gamma) xi + 1)/2 > 2 xi - 1
  bool density = false;  // (d-1-alpha) xi + 1 > 0
  bool both() const { return cost && density; }
};

Feasibility feasibility(const ExponentInput& in, double xi);

/// Supremum of the xi in (0, 1) satisfying both feasibility conditions, by
/// bisection to 1e-12. Both conditions are linear in xi and hold at 0, so the
/// feasible set is an interval.
double sup_feasible_xi(const ExponentInput& in);

/// min(3/(3 + alpha + 2 gamma - d), 1/(alpha + 1 - d) if positive, 1)
double sup_feasible_xi_closed_form(const ExponentInput& in);

/// min(1, 1/(1 + alpha + 2 gamma - d)). Throws if the denominator is <= 0.
double p2p_bound(const ExponentInput& in);

/// Volume of the intersection of two radius-r balls in R^d at center distance
/// s, via the regularized incomplete beta function.
double ball_overlap_general(int d, double s, double r);

/// Same, using the elementary closed forms for d <= 3.
double ball_overlap(int d, double s, double r);

/// Cov(V(0), V(s e_1)) = int_{max(1, s/2)}^{r_max} alpha r^(-alpha-1-2 gamma)
/// overlap_d(s, r) dr. r_max may be infinite. Throws QuadratureError on
/// non-convergence.
double analytic_covariance(const ModelParams& params, double s);

struct CovarianceSlope {
  double fitted = 0.0;   // least squares slope of log Cov vs log s
  double derived = 0.0;  // d - alpha - 2 gamma
  double printed = 0.0;  // d - alpha - gamma, reported alongside for comparison
};

/// Fits the log-log slope of analytic_covariance over `points` log-spaced
/// distances in [s_lo, s_hi].
CovarianceSlope covariance_slope(const ModelParams& params, double s_lo, double s_hi,
                                 int points = 16);

/// Sample covariance of (V(0), V(s e_axis)) over n_fields independent fields
/// drawn in the box spanning [-1, s + 1] along `axis` and [-1, 1] elsewhere.
/// The standard error is sd((x - mean x)(y - mean y)) / sqrt(n).
Estimate mc_covariance(const ModelParams& params, double s, std::size_t n_fields,
                       std::uint64_t seed, int axis = 0, int threads = 0);

/// Ordinary least squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace trapwalk
