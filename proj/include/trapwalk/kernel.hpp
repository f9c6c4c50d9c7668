#pragma once

#include "trapwalk/env.hpp"

namespace trapwalk {

inline constexpr int kDefaultKernelTerms = 64;

/// Truncated series value together with a bound on the omitted terms.
struct SeriesValue {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// Heat kernel of Brownian motion (generator Delta/2) on [0, 1] killed at the
/// endpoints, by its eigenfunction expansion
///   sum_{k=1}^{terms} 2 sin(k pi x) sin(k pi y) exp(-(k pi)^2 t / 2).
/// The tail bound is 2 sum_{k>terms} exp(-(k pi)^2 t / 2). Endpoints give 0.
/// Throws std::invalid_argument for t <= 0, terms < 1 or x, y outside [0, 1].
SeriesValue dirichlet_kernel_unit(double x, double y, double t, int terms = kDefaultKernelTerms);

/// Number of eigen-series terms after which the tail bound drops below `tol`.
int kernel_terms_for(double t, double tol = 1e-16);

struct KernelQuery {
  Point x;
  Point y;
  double t = 1.0;
  int terms = kDefaultKernelTerms;
};

/// Killed heat kernel on the box (-width/2, width/2)^dims: product over
/// coordinates of width^-1 * unit kernel at time t / width^2 and points
/// x_i / width + 1/2.
double dirichlet_kernel_box(const KernelQuery& q, double width, int dims);

/// prod_i min(x_i + width/2, width/2 - x_i)
double boundary_factor(std::span<const double> x, double width);

struct KernelBoundsReport {
  double kernel = 0.0;
  double upper = 0.0;  // prod_i A(x_i) A(y_i) / t^2
  double lower = 0.0;  // prod_i A(x_i) A(y_i) exp(-width^2 / t - t pi^2 / 2)
  bool upper_ok = true;
  bool lower_checked = false;  // only for t >= lower_threshold
  bool lower_ok = true;
  double upper_margin = 0.0;  // upper - kernel
  double lower_margin = 0.0;  // kernel - lower
};

/// Evaluates the kernel against the two-sided bounds A(x)A(y)/t^2 and
/// A(x)A(y) exp(-width^2/t - t pi^2/2), applied per coordinate and
/// multiplied (in one dimension these are the bounds themselves). The lower bound is only claimed for
/// large t, so it is checked only when t >= lower_threshold. The number of
/// series terms is raised as needed so truncation cannot flip a comparison.
KernelBoundsReport kernel_bounds_check(const KernelQuery& q, double width,
                                       double lower_threshold = 2.0);

/// P(tau_r <= s) for the first hitting time of level r by a standard 1-d
/// Brownian motion: 2 P(N(0,1) > r / sqrt(s)). Throws for r <= 0 or s <= 0.
double hitting_time_cdf(double r, double s);

/// P(max_{u <= 1} |B_u| >= c) for standard 1-d Brownian motion.
double sup_abs_exceed_prob(double c);

struct SlabExitTail {
  double asymptotic = 0.0;  // (8 sqrt(t) / (w sqrt(2 pi))) exp(-w^2 / (8 t)), w = 2 * halfwidth
  double exact = 0.0;       // P(max_{u <= t} |B_u| >= halfwidth)
};

/// Probability that Brownian motion started at the middle of a slab of the
/// given half-width leaves it by time t: small-t asymptotic form and exact
/// value. t = 0 gives zeros; throws for t < 0 or halfwidth <= 0.
SlabExitTail slab_exit_tail(double halfwidth, double t);

}  // namespace trapwalk
