#include "trapwalk/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

#include "trapwalk/parallel.hpp"
#include "trapwalk/quadrature.hpp"
#include "trapwalk/rng.hpp"

namespace trapwalk {

ExponentInput::ExponentInput(int d_, double alpha_, double gamma_)
    : d(d_), alpha(alpha_), gamma(gamma_) {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (!(alpha > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("alpha, gamma must be > 0");
  if (!(alpha + gamma - d > 0.0)) throw std::invalid_argument("alpha + gamma - d must be > 0");
}

double bar_xi(const ExponentInput& in) {
  if (in.gamma <= in.alpha - in.d) return 1.0 / (in.alpha - in.d + 1.0);
  return 3.0 / (3.0 + in.alpha + 2.0 * in.gamma - in.d);
}

double xi_lower_bound(const ExponentInput& in) { return std::max(bar_xi(in), 0.5); }

Feasibility feasibility(const ExponentInput& in, double xi) {
  Feasibility f;
  f.cost = ((in.d + 1.0 - in.alpha - 2.0 * in.gamma) * xi + 1.0) / 2.0 > 2.0 * xi - 1.0;
  f.density = (in.d - 1.0 - in.alpha) * xi + 1.0 > 0.0;
  return f;
}

double sup_feasible_xi(const ExponentInput& in) {
  if (feasibility(in, 1.0).both()) return 1.0;
  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (feasibility(in, mid).both()) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double sup_feasible_xi_closed_form(const ExponentInput& in) {
  double v = std::min(1.0, 3.0 / (3.0 + in.alpha + 2.0 * in.gamma - in.d));
  if (in.alpha + 1.0 - in.d > 0.0) v = std::min(v, 1.0 / (in.alpha + 1.0 - in.d));
  return v;
}

double p2p_bound(const ExponentInput& in) {
  const double den = 1.0 + in.alpha + 2.0 * in.gamma - in.d;
  if (!(den > 0.0)) throw std::invalid_argument("p2p_bound needs 1 + alpha + 2 gamma - d > 0");
  return std::min(1.0, 1.0 / den);
}

double ball_overlap_general(int d, double s, double r) {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if (s < 0.0 || !(r > 0.0)) throw std::invalid_argument("overlap needs s >= 0, r > 0");
  if (s >= 2.0 * r) return 0.0;
  const double x = 1.0 - s * s / (4.0 * r * r);
  return unit_ball_volume(d) * std::pow(r, d) * boost::math::ibeta((d + 1.0) / 2.0, 0.5, x);
}

double ball_overlap(int d, double s, double r) {
  if (s < 0.0 || !(r > 0.0)) throw std::invalid_argument("overlap needs s >= 0, r > 0");
  if (s >= 2.0 * r) return 0.0;
  switch (d) {
    case 1:
      return 2.0 * r - s;
    case 2:
      return 2.0 * r * r * std::acos(s / (2.0 * r)) - 0.5 * s * std::sqrt(4.0 * r * r - s * s);
    case 3:
      return std::numbers::pi * (4.0 * r + s) * (2.0 * r - s) * (2.0 * r - s) / 12.0;
    default:
      return ball_overlap_general(d, s, r);
  }
}

double analytic_covariance(const ModelParams& params, double s) {
  params.validate();
  if (!(s >= 0.0)) throw std::invalid_argument("covariance distance must be >= 0");
  const double lo = std::max(1.0, s / 2.0);
  if (lo >= params.r_max) return 0.0;
  const double expo = -params.alpha - 1.0 - 2.0 * params.gamma;
  auto f = [&](double r) {
    return params.alpha * std::pow(r, expo) * ball_overlap_general(params.d, s, r);
  };
  return integrate(f, lo, params.r_max, 1e-11, 20);
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_slope needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("ols_slope: x values are all equal");
  return sxy / sxx;
}

CovarianceSlope covariance_slope(const ModelParams& params, double s_lo, double s_hi,
                                 int points) {
  if (!(s_lo > 0.0) || !(s_hi > s_lo) || points < 2) {
    throw std::invalid_argument("covariance_slope needs 0 < s_lo < s_hi and >= 2 points");
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (int i = 0; i < points; ++i) {
    const double u = static_cast<double>(i) / (points - 1);
    const double s = s_lo * std::pow(s_hi / s_lo, u);
    const double c = analytic_covariance(params, s);
    if (!(c > 0.0)) throw std::domain_error("covariance vanishes inside the fit range");
    lx.push_back(std::log(s));
    ly.push_back(std::log(c));
  }
  CovarianceSlope out;
  out.fitted = ols_slope(lx, ly);
  out.derived = params.d - params.alpha - 2.0 * params.gamma;
  out.printed = params.d - params.alpha - params.gamma;
  return out;
}

Estimate mc_covariance(const ModelParams& params, double s, std::size_t n_fields,
                       std::uint64_t seed, int axis, int threads) {
  params.validate();
  if (!(s >= 0.0)) throw std::invalid_argument("covariance distance must be >= 0");
  if (axis < 0 || axis >= params.d) throw std::invalid_argument("probe axis out of range");
  if (n_fields < 2) throw std::invalid_argument("mc_covariance needs >= 2 fields");

  const auto d = static_cast<std::size_t>(params.d);
  Point lo(d, -1.0);
  Point hi(d, 1.0);
  hi[static_cast<std::size_t>(axis)] = s + 1.0;
  const Window window(lo, hi);

  std::vector<double> xs(n_fields);
  std::vector<double> ys(n_fields);
  parallel_for(n_fields, threads, [&](std::size_t i) {
    const std::uint64_t field_seed = split_seed(seed, static_cast<std::int64_t>(i))();
    const TrapField f = sample_field(params, window, field_seed);
    Point p(d, 0.0);
    xs[i] = f.potential(p);
    p[static_cast<std::size_t>(axis)] = s;
    ys[i] = f.potential(p);
  });

  const double n = static_cast<double>(n_fields);
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n_fields; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  std::vector<double> prod(n_fields);
  for (std::size_t i = 0; i < n_fields; ++i) prod[i] = (xs[i] - mx) * (ys[i] - my);
  Estimate e = sample_mean(prod);
  e.mean *= n / (n - 1.0);
  return e;
}

}  // namespace trapwalk
