#include "trapwalk/tilt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "trapwalk/quadrature.hpp"
#include "trapwalk/rng.hpp"

namespace trapwalk {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : v) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

bool center_in_region(std::span<const double> c, const TiltSpec& spec) {
  return spec.region.contains(c);
}

}  // namespace

TiltSpec::TiltSpec(const ModelParams& params_, double L_, double xi_, TiltMode mode_)
    : params(params_), L(L_), xi(xi_), mode(mode_) {
  params.validate();
  if (!(L >= 0.0) || !std::isfinite(L)) throw std::invalid_argument("tilt L must be finite and >= 0");
  if (!(xi > 0.0 && xi < 1.0)) throw std::invalid_argument("tilt xi must lie in (0, 1)");
  const double d = params.d;
  if (!((d - 1.0 - params.alpha) * xi + 1.0 > 0.0)) {
    throw std::invalid_argument("tilt needs (d - 1 - alpha) xi + 1 > 0");
  }
  const double width = std::pow(L, xi);
  const auto dd = static_cast<std::size_t>(params.d);
  Point lo(dd, -width / 2.0);
  Point hi(dd, width / 2.0);
  if (mode == TiltMode::PointToPlane) {
    lo[0] = L / 2.0;
    hi[0] = L;
  } else {
    lo[0] = L / 4.0;
    hi[0] = 3.0 * L / 4.0;
  }
  region = Window(lo, hi);
  band_lo = std::sqrt(d) * width;
  band_hi = 2.0 * std::sqrt(d) * width;
  kappa = ((d + 1.0 + params.alpha) * xi + 1.0) / 2.0;
  if (L == 0.0) {
    intensity = 0.0;
    lambda_hat = 0.0;
  } else {
    intensity = std::pow(L, -kappa);
    lambda_hat = std::sqrt(d) / 2.0 * std::pow(L, ((d - 1.0 - params.alpha) * xi + 1.0) / 2.0);
  }
}

double TiltSpec::lambda_hat_from_volume() const {
  return intensity * region.volume() * (band_hi - band_lo);
}

double TiltSpec::excess(double r) const {
  return std::pow(r, 1.0 + params.alpha) * intensity / params.alpha;
}

std::vector<Trap> sample_tilt(const TiltSpec& spec, std::uint64_t seed) {
  Rng rng = split_seed(seed, 0);
  const std::uint64_t n = rng.poisson(spec.lambda_hat);
  const auto d = static_cast<std::size_t>(spec.params.d);
  std::vector<Trap> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Trap t;
    t.center.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double lo = spec.region.lower()[j];
      const double hi = spec.region.upper()[j];
      t.center[j] = lo + rng.uniform() * (hi - lo);
    }
    t.radius = spec.band_lo + rng.uniform() * (spec.band_hi - spec.band_lo);
    out.push_back(std::move(t));
  }
  return out;
}

std::size_t count_in_band(const TrapField& field, const TiltSpec& spec) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    n += center_in_region(field.center(i), spec) && spec.in_band(field.radius(i));
  }
  return n;
}

std::size_t count_in_band(const std::vector<Trap>& traps, const TiltSpec& spec) {
  std::size_t n = 0;
  for (const auto& t : traps) n += center_in_region(t.center, spec) && spec.in_band(t.radius);
  return n;
}

double log_rn_derivative(const TrapField& field, const TiltSpec& spec) {
  if (field.params().r_max < spec.band_hi) {
    throw std::invalid_argument("r_max below the tilt radius band; band is not sampled");
  }
  if (!field.window().contains(spec.region)) {
    throw std::invalid_argument("field window does not contain the tilt region");
  }
  double s = -spec.lambda_hat;
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (center_in_region(field.center(i), spec) && spec.in_band(field.radius(i))) {
      s += std::log1p(spec.excess(field.radius(i)));
    }
  }
  return s;
}

double rn_derivative(const TrapField& field, const TiltSpec& spec) {
  return std::exp(log_rn_derivative(field, spec));
}

double log_rn_derivative(const std::vector<Trap>& traps, const TiltSpec& spec) {
  double s = -spec.lambda_hat;
  for (const auto& t : traps) {
    if (center_in_region(t.center, spec) && spec.in_band(t.radius)) s += std::log1p(spec.excess(t.radius));
  }
  return s;
}

RnMoments rn_moments(const TiltSpec& spec) {
  RnMoments m;
  if (spec.lambda_hat == 0.0) return {1.0, 1.0};
  const double vol = spec.region.volume();
  const double a = spec.params.alpha;
  auto base = [&](double r) { return a * std::pow(r, -a - 1.0); };
  const double sq = integrate([&](double r) { const double f = spec.excess(r); return f * f * base(r); },
                              spec.band_lo, spec.band_hi, 1e-12);
  const double inv = integrate(
      [&](double r) { const double f = spec.excess(r); return f * f / (1.0 + f) * base(r); },
      spec.band_lo, spec.band_hi, 1e-12);
  m.second = std::exp(vol * sq);
  m.inverse = std::exp(vol * inv);
  return m;
}

SlabCoverage slab_coverage_check(const TiltSpec& spec, const Trap& trap) {
  const double w = std::pow(spec.L, spec.xi);
  const double lo = spec.region.lower()[0];
  const double hi = spec.region.upper()[0] - w;
  const double c1 = trap.center[0];
  SlabCoverage out;
  const double raw = c1 - w / 2.0;
  out.a = std::clamp(raw, lo, std::max(lo, hi));
  out.clamped = out.a != raw;
  double far2 = std::max(std::abs(c1 - out.a), std::abs(c1 - out.a - w));
  far2 *= far2;
  for (std::size_t j = 1; j < trap.center.size(); ++j) {
    const double e = std::abs(trap.center[j]) + w / 2.0;
    far2 += e * e;
  }
  const double r2 = trap.radius * trap.radius;
  out.covered = far2 <= r2 * (1.0 + 1e-12);
  out.margin = trap.radius - std::sqrt(far2);
  return out;
}

PairedTilt paired_tilt_comparison(const TrapField& field, const TiltSpec& spec,
                                  const std::vector<Trap>& added, const PathConfig& config,
                                  std::size_t n, std::uint64_t seed, int threads,
                                  std::size_t bootstrap) {
  if (n < 1) throw std::invalid_argument("paired_tilt_comparison needs n >= 1");
  if (spec.params.d != field.dims()) throw std::invalid_argument("tilt spec dimension mismatch");
  PathConfig pc = config;
  pc.stop_on_tube_exit = false;
  const ResolvedConfig rc = resolve_config(field.params(), pc);
  const TrapField hat = TrapField::from_traps(field.params(), field.window(), added);
  const auto paths = simulate_paths(field, rc, n, seed, threads, &hat);

  PairedTilt out;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> base(n, neg_inf);
  std::vector<double> tilt(n, neg_inf);
  std::vector<double> integral;
  std::vector<double> integral_lw;
  for (std::size_t i = 0; i < n; ++i) {
    const PathResult& p = paths[i];
    if (!p.hit) continue;
    const double I = p.probe_integral;
    if (p.in_B) {
      ++out.paths_B;
      if (I != 0.0) ++out.b_mismatches;
    }
    if (!p.in_A) continue;
    ++out.paths_A;
    base[i] = p.log_weight();
    tilt[i] = base[i] - I;
    if (I < 0.0 || tilt[i] > base[i]) ++out.sign_violations;
    integral.push_back(I);
    integral_lw.push_back(base[i]);
  }
  if (out.paths_A == 0) return out;

  out.defined = true;
  const double log_n = std::log(static_cast<double>(n));
  out.log_z_base = log_sum_exp(base) - log_n;
  out.log_z_tilt = log_sum_exp(tilt) - log_n;
  out.logdiff = out.log_z_base - out.log_z_tilt;
  out.added_integral = weighted_mean(integral, integral_lw);

  if (bootstrap > 1) {
    Rng rng = split_seed(derive_seed(seed, 7), 0);
    std::vector<double> diffs;
    std::vector<double> bb(n);
    std::vector<double> bt(n);
    for (std::size_t b = 0; b < bootstrap; ++b) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
        bb[i] = base[k];
        bt[i] = tilt[k];
      }
      const double lb = log_sum_exp(bb);
      if (std::isfinite(lb)) diffs.push_back(lb - log_sum_exp(bt));
    }
    if (diffs.size() > 1) {
      out.logdiff_se = sample_mean(diffs).std_err * std::sqrt(static_cast<double>(diffs.size()));
    }
  }
  return out;
}

double tilt_cost_exponent(const ModelParams& params, double xi) {
  return ((params.d + 1.0 - params.alpha - 2.0 * params.gamma) * xi + 1.0) / 2.0;
}

}  // namespace trapwalk
