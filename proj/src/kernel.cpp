#include "trapwalk/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace trapwalk {

namespace {

constexpr double kPi = std::numbers::pi;

double gaussian_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

void check_unit_args(double x, double y, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("kernel time must be > 0");
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
    throw std::invalid_argument("kernel arguments must lie in [0, 1]");
  }
}

}  // namespace

SeriesValue dirichlet_kernel_unit(double x, double y, double t, int terms) {
  check_unit_args(x, y, t);
  if (terms < 1) throw std::invalid_argument("series needs at least one term");

  const double decay = kPi * kPi * t / 2.0;
  const double k1 = static_cast<double>(terms) + 1.0;
  // Terms beyond K shrink at least geometrically with ratio exp(-(2K+3) decay).
  const double tail =
      2.0 * std::exp(-k1 * k1 * decay) / -std::expm1(-(2.0 * terms + 3.0) * decay);

  if (x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0) return {0.0, tail};

  double sum = 0.0;
  for (int k = 1; k <= terms; ++k) {
    const double kk = static_cast<double>(k);
    const double damp = std::exp(-kk * kk * decay);
    if (damp == 0.0) break;
    sum += 2.0 * std::sin(kk * kPi * x) * std::sin(kk * kPi * y) * damp;
  }
  return {sum, tail};
}

int kernel_terms_for(double t, double tol) {
  if (!(t > 0.0)) throw std::invalid_argument("kernel time must be > 0");
  // exp(-(K pi)^2 t / 2) <= tol  <=>  K >= sqrt(2 log(1/tol) / t) / pi
  const double k = std::sqrt(2.0 * std::log(1.0 / tol) / t) / kPi;
  return std::max(1, static_cast<int>(std::ceil(k)) + 1);
}

double dirichlet_kernel_box(const KernelQuery& q, double width, int dims) {
  if (!(width > 0.0)) throw std::invalid_argument("box width must be > 0");
  if (dims < 1 || q.x.size() != static_cast<std::size_t>(dims) ||
      q.y.size() != static_cast<std::size_t>(dims)) {
    throw std::invalid_argument("kernel query dimension mismatch");
  }
  const double half = width / 2.0;
  const double t_unit = q.t / (width * width);
  double p = 1.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    if (q.x[i] < -half || q.x[i] > half || q.y[i] < -half || q.y[i] > half) {
      throw std::invalid_argument("kernel query outside the box");
    }
    p *= dirichlet_kernel_unit(q.x[i] / width + 0.5, q.y[i] / width + 0.5, t_unit, q.terms).value /
         width;
  }
  return p;
}

double boundary_factor(std::span<const double> x, double width) {
  const double half = width / 2.0;
  double a = 1.0;
  for (double xi : x) a *= std::max(0.0, std::min(xi + half, half - xi));
  return a;
}

KernelBoundsReport kernel_bounds_check(const KernelQuery& q, double width,
                                       double lower_threshold) {
  KernelQuery exact = q;
  exact.terms = std::max(q.terms, kernel_terms_for(q.t / (width * width)));
  const int dims = static_cast<int>(q.x.size());

  KernelBoundsReport r;
  r.kernel = dirichlet_kernel_box(exact, width, dims);
  // One factor per coordinate; the kernel is a product over coordinates.
  r.upper = 1.0;
  r.lower = 1.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) {
    const double aa = boundary_factor(std::span(&q.x[i], 1), width) *
                      boundary_factor(std::span(&q.y[i], 1), width);
    r.upper *= aa / (q.t * q.t);
    r.lower *= aa * std::exp(-width * width / q.t - q.t * kPi * kPi / 2.0);
  }
  r.upper_margin = r.upper - r.kernel;
  r.lower_margin = r.kernel - r.lower;
  const double slack = 1e-12 * std::max(r.kernel, 1e-300);
  r.upper_ok = r.upper_margin >= -slack;
  r.lower_checked = q.t >= lower_threshold;
  r.lower_ok = !r.lower_checked || r.lower_margin >= -slack;
  return r;
}

double hitting_time_cdf(double r, double s) {
  if (!(r > 0.0) || !(s > 0.0)) throw std::invalid_argument("hitting_time_cdf needs r, s > 0");
  return std::erfc(r / std::sqrt(2.0 * s));
}

double sup_abs_exceed_prob(double c) {
  if (!(c > 0.0)) return 1.0;
  if (c >= 1.0) {
    // Reflection series: 4 sum_{j>=1} (-1)^(j+1) P(N > (2j-1) c).
    double sum = 0.0;
    for (int j = 1; j < 200; ++j) {
      const double term = gaussian_tail((2.0 * j - 1.0) * c);
      sum += (j % 2 == 1) ? term : -term;
      if (term < 1e-300 || term < 1e-18 * std::abs(sum)) break;
    }
    return 4.0 * sum;
  }
  // Eigen series for the survival probability converges fast for small c.
  double stay = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double m = 2.0 * k + 1.0;
    const double term = std::exp(-m * m * kPi * kPi / (8.0 * c * c)) / m;
    stay += (k % 2 == 0) ? term : -term;
    if (term < 1e-18) break;
  }
  return 1.0 - 4.0 / kPi * stay;
}

SlabExitTail slab_exit_tail(double halfwidth, double t) {
  if (!(halfwidth > 0.0)) throw std::invalid_argument("slab half-width must be > 0");
  if (t < 0.0) throw std::invalid_argument("slab exit time must be >= 0");
  if (t == 0.0) return {};
  const double w = 2.0 * halfwidth;
  SlabExitTail out;
  out.asymptotic = 8.0 * std::sqrt(t) / (w * std::sqrt(2.0 * kPi)) * std::exp(-w * w / (8.0 * t));
  out.exact = sup_abs_exceed_prob(halfwidth / std::sqrt(t));
  return out;
}

}  // namespace trapwalk
