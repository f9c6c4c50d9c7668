#include "trapwalk/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "trapwalk/parallel.hpp"
#include "trapwalk/theory.hpp"

namespace trapwalk {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kBudgetTail = 1e-6;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// log P(N > z) for z >= 0, asymptotic beyond the range of erfc.
double log_gaussian_tail(double z) {
  if (z < 30.0) return std::log(0.5 * std::erfc(z / std::numbers::sqrt2));
  return -0.5 * z * z - std::log(z) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / (z * z));
}

// Michael-Schucany-Haas sampler for the inverse Gaussian law IG(mean, shape).
// The smaller root is taken as mean^2 / (larger root) to avoid cancellation.
double inverse_gaussian(double mean, double shape, Rng& rng) {
  const double z = rng.normal();
  const double nu = z * z;
  const double big = mean + mean * mean * nu / (2.0 * shape) +
                     mean / (2.0 * shape) * std::sqrt(4.0 * mean * shape * nu + mean * mean * nu * nu);
  const double small = mean * mean / big;
  return rng.uniform() <= mean / (mean + small) ? small : big;
}

double transversal_max(std::span<const double> x) {
  double m = 0.0;
  for (std::size_t j = 1; j < x.size(); ++j) m = std::max(m, std::abs(x[j]));
  return m;
}

}  // namespace

double hitting_time_survival(double L, double mu, double t) {
  require(L >= 0.0 && mu >= 0.0, "hitting_time_survival needs L, mu >= 0");
  if (L == 0.0) return 0.0;
  if (!(t > 0.0)) return 1.0;
  if (mu == 0.0) return std::erf(L / std::sqrt(2.0 * t));
  const double st = std::sqrt(t);
  const double first = std_normal_cdf((L - mu * t) / st);
  const double second = std::exp(2.0 * mu * L + log_gaussian_tail((L + mu * t) / st));
  return std::clamp(first - second, 0.0, 1.0);
}

ResolvedConfig resolve_config(const ModelParams& params, const PathConfig& config) {
  params.validate();
  require(config.L >= 0.0 && std::isfinite(config.L), "L must be finite and >= 0");
  require(config.xi > 0.0 && config.xi < 1.0, "xi must lie in (0, 1)");
  require(config.dt > 0.0 && std::isfinite(config.dt), "dt must be finite and > 0");
  require(config.max_steps >= 0, "max_steps must be >= 0");
  for (std::size_t k = 1; k < config.slab_edges.size(); ++k) {
    require(config.slab_edges[k] > config.slab_edges[k - 1], "slab edges must increase");
  }

  ResolvedConfig r;
  r.path = config;
  r.drift = config.drift.value_or(std::sqrt(2.0 * params.lambda));
  require(r.drift >= 0.0 && std::isfinite(r.drift), "drift must be finite and >= 0");

  const double lam = params.lambda;
  const double killing_rule_t = (config.L * std::sqrt(2.0 * lam) + std::log(1.0 / kBudgetTail)) / lam;
  if (config.max_steps == 0) {
    const double steps = std::ceil(killing_rule_t / config.dt);
    require(steps < 1e12, "step budget too large; increase dt");
    r.max_steps = std::max<std::int64_t>(1, static_cast<std::int64_t>(steps));
  } else {
    const double t = static_cast<double>(config.max_steps) * config.dt;
    const bool killing_ok = t >= killing_rule_t;
    const bool hitting_ok = hitting_time_survival(config.L, r.drift, t) <= kBudgetTail;
    if (!killing_ok && !hitting_ok) {
      throw std::invalid_argument("max_steps * dt = " + std::to_string(t) +
                                  " is too short to reach L with probability 1 - 1e-6");
    }
    r.max_steps = config.max_steps;
  }

  const auto d = static_cast<std::size_t>(params.d);
  const double width = std::pow(config.L, config.xi);
  r.tube_half = width / 2.0;
  r.block_margin = 2.0 * std::sqrt(static_cast<double>(params.d)) * width;
  Point lo(d, -r.tube_half);
  Point hi(d, r.tube_half);
  if (config.target == Target::Hyperplane) {
    lo[0] = config.L / 2.0;
    hi[0] = config.L;
  } else {
    lo[0] = config.L / 4.0;
    hi[0] = 3.0 * config.L / 4.0;
  }
  r.block = Window(lo, hi);
  return r;
}

Window required_window(int d, double L, double xi) { return path_window(d, L, xi, 0.0); }

Window path_window(int d, double L, double xi, double extra) {
  require(d >= 1 && L >= 0.0 && xi > 0.0 && xi < 1.0 && extra >= 0.0, "bad path window arguments");
  const double width = std::pow(L, xi);
  const double pad = 2.0 * std::sqrt(static_cast<double>(d)) * width;
  const double half = width / 2.0 + pad + extra;
  Point lo(static_cast<std::size_t>(d), -half);
  Point hi(static_cast<std::size_t>(d), half);
  lo[0] = -pad;
  hi[0] = L + pad;
  return Window(lo, hi);
}

double default_window_extra(double L, double drift) {
  require(L >= 0.0 && drift >= 0.0, "default_window_extra needs L, drift >= 0");
  const double t_typ = drift > 0.0 ? L / drift : L * L;
  return 4.0 * std::sqrt(t_typ);
}

Window rotation_box(int d, double L, double xi) {
  require(d >= 2, "rotation_box needs d >= 2");
  const Window need = required_window(d, L, xi);
  double rho = 0.0;
  for (double u : {need.lower()[0], need.upper()[0]}) {
    for (double v : {need.lower()[1], need.upper()[1]}) rho = std::max(rho, std::hypot(u, v));
  }
  Point lo = need.lower();
  Point hi = need.upper();
  lo[0] = lo[1] = -rho;
  hi[0] = hi[1] = rho;
  return Window(lo, hi);
}

double PathResult::fk_weight() const { return std::exp(log_fk); }
double PathResult::girsanov() const { return std::exp(log_girsanov); }
double PathResult::log_weight() const { return hit ? log_fk + log_girsanov : kNegInf; }

PathResult simulate_path(const TrapField& field, const ResolvedConfig& config, Rng& rng,
                         const TrapField* probe) {
  const PathConfig& pc = config.path;
  const ModelParams& params = field.params();
  const auto d = static_cast<std::size_t>(params.d);
  if (config.block.dims() != params.d) throw std::invalid_argument("config resolved for another d");
  if (!field.window().contains(required_window(params.d, pc.L, pc.xi))) {
    throw std::invalid_argument("field window does not contain the padded tube");
  }
  if (probe != nullptr && probe->dims() != params.d) {
    throw std::invalid_argument("probe field dimension mismatch");
  }

  PathResult r;
  if (pc.slab_edges.size() >= 2) r.slab_times.assign(pc.slab_edges.size() - 1, 0.0);
  r.end.assign(d, 0.0);
  if (pc.L == 0.0) {
    r.hit = true;
    r.in_B = false;
    return r;
  }

  const double h = pc.dt;
  const double sq = std::sqrt(h);
  const double mu = config.drift;
  const double L = pc.L;
  const bool plane = pc.target == Target::Hyperplane;
  const Window& window = field.window();
  const auto& edges = pc.slab_edges;

  Point x(d, 0.0);
  Point xn(d);
  Point mid(d);
  double v_int = 0.0;
  double probe_int = 0.0;
  double t = 0.0;
  if (config.block.distance(x) <= config.block_margin) r.in_B = false;

  bool stopped = false;
  for (std::int64_t step = 0; step < config.max_steps; ++step) {
    for (std::size_t j = 0; j < d; ++j) xn[j] = x[j] + sq * rng.normal();
    xn[0] += mu * h;

    double tau = h;
    bool crossed = false;
    if (plane) {
      if (xn[0] >= L) {
        crossed = true;
      } else {
        // Bridge between the step ends crosses L with probability exp(-2ab/h).
        const double a = L - x[0];
        const double b = L - xn[0];
        crossed = rng.uniform() < std::exp(-2.0 * a * b / h);
      }
      if (crossed) {
        const double a = L - x[0];
        const double b = std::abs(L - xn[0]);
        if (b > 0.0) {
          const double u = inverse_gaussian(a / b, a * a / h, rng);
          tau = h * u / (1.0 + u);
        }
        const double frac = tau / h;
        const double spread = std::sqrt(tau * (h - tau) / h);
        for (std::size_t j = 1; j < d; ++j) {
          xn[j] = x[j] + frac * (xn[j] - x[j]) + spread * rng.normal();
        }
        xn[0] = L;
      }
    }

    for (std::size_t j = 0; j < d; ++j) mid[j] = 0.5 * (x[j] + xn[j]);
    v_int += field.potential(mid) * tau;
    if (probe != nullptr) probe_int += probe->potential(mid) * tau;
    if (r.in_B && (config.block.distance(mid) <= config.block_margin ||
                   config.block.distance(xn) <= config.block_margin)) {
      r.in_B = false;
    }
    if (!r.left_window && !window.contains(mid)) r.left_window = true;
    if (!r.slab_times.empty() && mid[0] >= edges.front() && mid[0] < edges.back()) {
      if (!pc.slab_tube_only || transversal_max(mid) <= config.tube_half) {
        const auto k = static_cast<std::size_t>(
            std::upper_bound(edges.begin(), edges.end(), mid[0]) - edges.begin() - 1);
        r.slab_times[k] += tau;
      }
    }
    t += tau;
    const double trans = transversal_max(xn);
    r.trans_max = std::max(r.trans_max, trans);
    if (trans > config.tube_half) r.in_A = false;
    std::swap(x, xn);
    ++r.steps;

    if (crossed) {
      r.hit = true;
      break;
    }
    if (!plane) {
      double dist2 = (x[0] - L) * (x[0] - L);
      for (std::size_t j = 1; j < d; ++j) dist2 += x[j] * x[j];
      if (dist2 <= 1.0) {
        r.hit = true;
        break;
      }
    }
    if (pc.stop_on_tube_exit && !r.in_A) {
      stopped = true;
      break;
    }
  }

  r.exhausted = !r.hit && !stopped;
  r.T = t;
  r.log_fk = -v_int - params.lambda * t;
  r.log_girsanov = -mu * x[0] + mu * mu * t / 2.0;
  r.probe_integral = probe_int;
  r.end = x;
  return r;
}

std::vector<PathResult> simulate_paths(const TrapField& field, const ResolvedConfig& config,
                                       std::size_t n, std::uint64_t seed, int threads,
                                       const TrapField* probe) {
  std::vector<PathResult> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng = split_seed(seed, static_cast<std::int64_t>(i));
    out[i] = simulate_path(field, config, rng, probe);
  });
  return out;
}

ZEstimate reduce_log_weights(const std::vector<double>& log_w) {
  ZEstimate z;
  const std::size_t n = log_w.size();
  z.z.n = n;
  double top = kNegInf;
  for (double lw : log_w) top = std::max(top, lw);
  if (n == 0 || !std::isfinite(top)) {
    z.log_mean = kNegInf;
    z.z.low_confidence = true;
    return z;
  }
  double s1 = 0.0;
  double s2 = 0.0;
  for (double lw : log_w) {
    const double w = std::exp(lw - top);
    s1 += w;
    s2 += w * w;
  }
  const double nn = static_cast<double>(n);
  const double mean = s1 / nn;
  const double var = n > 1 ? std::max(0.0, (s2 / nn - mean * mean) * nn / (nn - 1.0)) : 0.0;
  const double se = std::sqrt(var / nn);
  z.log_mean = top + std::log(mean);
  z.z.mean = std::exp(z.log_mean);
  z.z.std_err = std::exp(top) * se;
  z.rel_err = se / mean;
  z.z.ess = s1 * s1 / s2;
  z.z.low_confidence = z.z.ess < kMinEss;
  return z;
}

ZEstimate estimate_Z(const TrapField& field, const PathConfig& config, std::size_t n,
                     Event event, std::uint64_t seed, int threads) {
  if (n < 1) throw std::invalid_argument("estimate_Z needs n >= 1");
  PathConfig pc = config;
  const TrapField* use = &field;
  std::optional<TrapField> rotated;
  if (event.kind == Event::Kind::ATheta) {
    rotated = rotate_field(field, -event.theta);
    use = &*rotated;
  }
  const bool tube_event = event.kind == Event::Kind::A || event.kind == Event::Kind::ATheta;
  if (tube_event) pc.stop_on_tube_exit = true;
  const ResolvedConfig rc = resolve_config(field.params(), pc);
  const Window need = required_window(field.dims(), pc.L, pc.xi);
  const bool covered = event.kind == Event::Kind::ATheta
                           ? covered_after_rotation(field.window(), need, -event.theta)
                           : field.window().contains(need);
  if (!covered) throw std::invalid_argument("field window does not contain the padded tube");

  const auto paths = simulate_paths(*use, rc, n, seed, threads);
  std::vector<double> log_w(n, kNegInf);
  std::size_t hits = 0, in_event = 0, exhausted = 0, left = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const PathResult& p = paths[i];
    hits += p.hit;
    exhausted += p.exhausted;
    left += p.left_window;
    bool ok = p.hit;
    if (tube_event) ok = ok && p.in_A;
    if (event.kind == Event::Kind::B) ok = ok && p.in_B;
    if (ok) {
      ++in_event;
      log_w[i] = p.log_weight();
    }
  }
  ZEstimate z = reduce_log_weights(log_w);
  z.hits = hits;
  z.in_event = in_event;
  z.exhausted_rate = static_cast<double>(exhausted) / static_cast<double>(n);
  z.left_window_rate = static_cast<double>(left) / static_cast<double>(n);
  return z;
}

FluctuationReport measure_fluctuation(const ModelParams& params, const FluctuationPlan& plan,
                                      std::uint64_t seed, int threads) {
  params.validate();
  if (plan.L_grid.size() < 3) throw std::invalid_argument("fluctuation needs >= 3 values of L");
  for (std::size_t k = 0; k < plan.L_grid.size(); ++k) {
    require(plan.L_grid[k] > 0.0, "L values must be > 0");
    if (k > 0) require(plan.L_grid[k] > plan.L_grid[k - 1], "L grid must increase");
  }
  require(params.d >= 2, "transversal fluctuations need d >= 2");
  require(plan.fields >= 2, "fluctuation needs >= 2 fields per L");
  require(plan.paths_per_field >= 1, "fluctuation needs >= 1 path per field");

  const std::size_t nL = plan.L_grid.size();
  const std::size_t F = plan.fields;
  std::vector<std::vector<double>> field_means(nL, std::vector<double>(F, 0.0));
  FluctuationReport rep;

  for (std::size_t li = 0; li < nL; ++li) {
    PathConfig pc = plan.path;
    pc.L = plan.L_grid[li];
    pc.xi = plan.xi;
    const ResolvedConfig rc = resolve_config(params, pc);
    const double extra = plan.window_extra >= 0.0 ? plan.window_extra : default_window_extra(pc.L, rc.drift);
    const Window window = path_window(params.d, pc.L, pc.xi, extra);

    FluctuationPoint pt;
    pt.L = pc.L;
    pt.min_ess = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < F; ++f) {
      const TrapField field = plan.free_motion
                                  ? TrapField::empty(params, window)
                                  : sample_field(params, window, derive_seed(seed, 1, li, f));
      const auto paths =
          simulate_paths(field, rc, plan.paths_per_field, derive_seed(seed, 2, li, f), threads);
      std::vector<double> x;
      std::vector<double> lw;
      for (const auto& p : paths) {
        if (!p.hit || !(p.trans_max > 0.0)) continue;
        x.push_back(std::log(p.trans_max));
        lw.push_back(p.log_weight());
      }
      const Estimate e = weighted_mean(x, lw);
      field_means[li][f] = e.mean;
      pt.min_ess = std::min(pt.min_ess, e.ess);
      pt.low_confidence = pt.low_confidence || e.low_confidence;
    }
    const Estimate across = sample_mean(field_means[li]);
    pt.mean_log_trans = across.mean;
    pt.std_err = across.std_err;
    rep.low_confidence = rep.low_confidence || pt.low_confidence;
    rep.points.push_back(pt);
  }

  std::vector<double> lx(nL);
  std::vector<double> ly(nL);
  for (std::size_t li = 0; li < nL; ++li) {
    lx[li] = std::log(plan.L_grid[li]);
    ly[li] = rep.points[li].mean_log_trans;
  }
  rep.slope = ols_slope(lx, ly);

  if (plan.bootstrap > 0) {
    Rng rng = split_seed(derive_seed(seed, 3), 0);
    std::vector<double> slopes(plan.bootstrap);
    std::vector<double> by(nL);
    for (std::size_t b = 0; b < plan.bootstrap; ++b) {
      for (std::size_t li = 0; li < nL; ++li) {
        double s = 0.0;
        for (std::size_t f = 0; f < F; ++f) {
          s += field_means[li][static_cast<std::size_t>(rng.uniform() * static_cast<double>(F))];
        }
        by[li] = s / static_cast<double>(F);
      }
      slopes[b] = ols_slope(lx, by);
    }
    const Estimate spread = sample_mean(slopes);
    rep.slope_se = spread.std_err * std::sqrt(static_cast<double>(plan.bootstrap));
    std::sort(slopes.begin(), slopes.end());
    const auto at = [&](double q) {
      const auto k = static_cast<std::size_t>(q * static_cast<double>(slopes.size() - 1));
      return slopes[k];
    };
    rep.ci_lo = at(0.025);
    rep.ci_hi = at(0.975);
  }
  return rep;
}

SlabOccupation slab_occupation_stats(const TrapField& field, const PathConfig& config,
                                     double a, std::size_t n, std::uint64_t seed,
                                     bool tube_restricted, double eps, int threads) {
  const double width = std::pow(config.L, config.xi);
  const double slack = 1e-12 * std::max(1.0, config.L);
  if (!(a >= -slack && a <= config.L - width + slack)) {
    throw std::invalid_argument("slab anchor must lie in [0, L - L^xi]");
  }
  require(n >= 1, "slab_occupation_stats needs n >= 1");
  PathConfig pc = config;
  pc.slab_edges = {a, a + width};
  pc.slab_tube_only = true;
  pc.stop_on_tube_exit = tube_restricted;
  const ResolvedConfig rc = resolve_config(field.params(), pc);
  const auto paths = simulate_paths(field, rc, n, seed, threads);

  SlabOccupation out;
  out.threshold = std::pow(config.L, config.xi - eps);
  std::vector<double> occ(n);
  std::vector<double> short_hit(n);
  std::vector<double> lw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PathResult& p = paths[i];
    occ[i] = p.slab_times[0];
    short_hit[i] = occ[i] <= out.threshold ? 1.0 : 0.0;
    lw[i] = (tube_restricted && !p.in_A) ? kNegInf : p.log_weight();
  }
  out.occupation = weighted_mean(occ, lw);
  out.short_fraction = weighted_mean(short_hit, lw);
  return out;
}

double rotation_angle(int d, double L, double xi) {
  return 10.0 * std::sqrt(static_cast<double>(d)) * std::pow(L, xi - 1.0);
}

RotationReport rotation_exchange_test(const ModelParams& params, const RotationPlan& plan,
                                      std::uint64_t seed, int threads) {
  params.validate();
  require(params.d >= 2, "rotations need d >= 2");
  require(plan.N >= 1, "rotation test needs N >= 1");
  require(plan.fields >= 1 && plan.paths_per_field >= 1, "rotation test needs fields and paths");

  RotationReport rep;
  rep.N = plan.N;
  rep.fields = plan.fields;
  rep.theta = plan.theta.value_or(rotation_angle(params.d, plan.L, plan.xi));

  PathConfig pc = plan.path;
  pc.L = plan.L;
  pc.xi = plan.xi;
  pc.stop_on_tube_exit = true;

  const Window box = rotation_box(params.d, plan.L, plan.xi);

  const int count = 2 * plan.N + 1;
  for (std::size_t f = 0; f < plan.fields; ++f) {
    const TrapField base = sample_field(params, box, derive_seed(seed, 1, f));
    const std::uint64_t path_seed = derive_seed(seed, 2, f);
    std::vector<double> logz(static_cast<std::size_t>(count));
    for (int i = -plan.N; i <= plan.N; ++i) {
      const TrapField rotated = i == 0 ? base : rotate_field(base, i * rep.theta);
      logz[static_cast<std::size_t>(i + plan.N)] =
          estimate_Z(rotated, pc, plan.paths_per_field, Event::a(), path_seed, threads).log_mean;
    }
    // Candidates in tie-break order 0, -1, 1, -2, 2, ...
    int best = 0;
    double best_v = logz[static_cast<std::size_t>(plan.N)];
    for (int k = 1; k <= plan.N; ++k) {
      for (int i : {-k, k}) {
        const double v = logz[static_cast<std::size_t>(i + plan.N)];
        if (v > best_v) {
          best_v = v;
          best = i;
        }
      }
    }
    int ties = 0;
    for (double v : logz) ties += (v == best_v);
    if (ties > 1) ++rep.degenerate;
    if (best == 0) ++rep.center_max;
    rep.argmax.push_back(best);
  }
  rep.frequency = static_cast<double>(rep.center_max) / static_cast<double>(plan.fields);
  rep.expected = 1.0 / count;
  rep.sigma = std::sqrt(rep.expected * (1.0 - rep.expected) / static_cast<double>(plan.fields));
  rep.within_3sigma = std::abs(rep.frequency - rep.expected) <= 3.0 * rep.sigma;
  return rep;
}

}  // namespace trapwalk
