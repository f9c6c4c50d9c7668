#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "criteria.hpp"
#include "trapwalk/env.hpp"
#include "trapwalk/kernel.hpp"
#include "trapwalk/parallel.hpp"
#include "trapwalk/sampler.hpp"
#include "trapwalk/theory.hpp"
#include "trapwalk/tilt.hpp"
#include "trapwalk/version.hpp"

namespace trapwalk::cli {

namespace {

// derive_seed tags; a command's streams depend only on (seed, tag, indices).
enum Tag : std::uint64_t {
  kTagField = 1,
  kTagPaths = 2,
  kTagTiltLayer = 3,
  kTagRnFields = 4,
  kTagKernel = 5,
  kTagCovariance = 6,
  kTagRotation = 7,
  kTagFluctuation = 8,
};

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& columns)
      : out_(path), width_(columns.size()) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(columns);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
  std::size_t width_;
};

void write_manifest(const Invocation& inv) {
  std::ofstream out(inv.out / (inv.command + ".manifest"));
  out << "command=" << inv.command << '\n';
  out << "trapwalk_version=" << kVersion << '\n';
  for (const auto& [module, version] : kModuleVersions) {
    out << "module." << module << '=' << version << '\n';
  }
  for (const auto& [key, value] : inv.config.echo()) {
    if (key != "output") out << "config." << key << '=' << value << '\n';
  }
}

double resolved_drift(const ExperimentConfig& c) {
  return c.drift.value_or(std::sqrt(2.0 * c.model.lambda));
}

double window_extra(const ExperimentConfig& c, double L) {
  return c.window_extra >= 0.0 ? c.window_extra : default_window_extra(L, resolved_drift(c));
}

Window hull(const Window& a, const Window& b) {
  Point lo = a.lower();
  Point hi = a.upper();
  for (std::size_t j = 0; j < lo.size(); ++j) {
    lo[j] = std::min(lo[j], b.lower()[j]);
    hi[j] = std::max(hi[j], b.upper()[j]);
  }
  return Window(lo, hi);
}

bool wants_rotation(const ExperimentConfig& c) {
  return std::find(c.events.begin(), c.events.end(), "A_theta") != c.events.end();
}

/// The box fields for grid point L are drawn on; shared by generate and estimate-z.
Window field_window(const ExperimentConfig& c, double L) {
  Window w = path_window(c.model.d, L, c.xi, window_extra(c, L));
  if (wants_rotation(c)) w = hull(w, rotation_box(c.model.d, L, c.xi));
  return w;
}

TrapField grid_field(const ExperimentConfig& c, const Window& window, std::size_t li, std::size_t f) {
  if (c.free_motion) return TrapField::empty(c.model, window);
  return sample_field(c.model, window, derive_seed(c.master_seed, kTagField, li, f));
}

int cmd_generate(const Invocation& inv, std::ostream& log) {
  const ExperimentConfig& c = inv.config;
  require_L_grid(c);
  Csv csv(inv.out / "generate.csv",
          {"L", "xi", "field", "seed", "traps", "window_volume", "file"});
  for (std::size_t li = 0; li < c.L_grid.size(); ++li) {
    const double L = c.L_grid[li];
    const Window window = field_window(c, L);
    for (std::size_t f = 0; f < c.fields_per_point; ++f) {
      const TrapField field = grid_field(c, window, li, f);
      const std::string name = "field_L" + std::to_string(li) + "_f" + std::to_string(f) + ".txt";
      std::ofstream out(inv.out / name);
      save_field(field, out);
      csv.row({num(L), num(c.xi), std::to_string(f),
                std::to_string(derive_seed(c.master_seed, kTagField, li, f)),
                std::to_string(field.size()), num(window.volume()), name});
    }
    log << "L=" << num(L) << ": " << c.fields_per_point << " field(s)\n";
  }
  return kExitOk;
}

Event parse_event(const std::string& name, const ExperimentConfig& c, double L) {
  if (name == "all") return Event::all();
  if (name == "A") return Event::a();
  if (name == "B") return Event::b();
  if (c.model.d < 2) throw ConfigError("event A_theta needs d >= 2");
  return Event::a_theta(c.theta.value_or(rotation_angle(c.model.d, L, c.xi)));
}

int cmd_estimate_z(const Invocation& inv, std::ostream& log) {
  const ExperimentConfig& c = inv.config;
  require_L_grid(c);
  Csv csv(inv.out / "estimate-z.csv",
          {"L", "xi", "event", "theta", "field", "mean", "log_mean", "stderr", "n", "ess", "hits",
           "in_event", "exhausted_rate", "left_window_rate", "dt", "seed"});
  for (std::size_t li = 0; li < c.L_grid.size(); ++li) {
    const double L = c.L_grid[li];
    const PathConfig pc = c.path(L);
    const Window window = field_window(c, L);
    for (std::size_t f = 0; f < c.fields_per_point; ++f) {
      const TrapField field = grid_field(c, window, li, f);
      // One path seed for every event, so the events are estimated on common paths.
      const std::uint64_t seed = derive_seed(c.master_seed, kTagPaths, li, f);
      for (const auto& name : c.events) {
        const Event event = parse_event(name, c, L);
        const ZEstimate z = estimate_Z(field, pc, c.replicas, event, seed, inv.threads);
        csv.row({num(L), num(c.xi), name, num(event.theta), std::to_string(f), num(z.z.mean),
                  num(z.log_mean), num(z.z.std_err), std::to_string(z.z.n), num(z.z.ess),
                  std::to_string(z.hits), std::to_string(z.in_event), num(z.exhausted_rate),
                  num(z.left_window_rate), num(c.dt), std::to_string(seed)});
        log << "L=" << num(L) << " field " << f << " " << name << ": log Z=" << num(z.log_mean)
            << '\n';
      }
    }
  }
  return kExitOk;
}

int cmd_fluctuation(const Invocation& inv, std::ostream& log) {
  const ExperimentConfig& c = inv.config;
  require_L_grid(c);
  FluctuationPlan plan;
  plan.L_grid = c.L_grid;
  plan.xi = c.xi;
  plan.path = c.path(c.L_grid.front());
  plan.paths_per_field = c.replicas;
  plan.fields = c.fields_per_point;
  plan.free_motion = c.free_motion;
  plan.window_extra = c.window_extra;
  plan.bootstrap = c.bootstrap;
  const FluctuationReport rep =
      measure_fluctuation(c.model, plan, derive_seed(c.master_seed, kTagFluctuation), inv.threads);

  {
    Csv csv(inv.out / "fluctuation.csv",
            {"L", "weighted_mean_log_transmax", "stderr", "min_ess", "low_confidence"});
    for (const auto& p : rep.points) {
      csv.row({num(p.L), num(p.mean_log_trans), num(p.std_err), num(p.min_ess),
                p.low_confidence ? "1" : "0"});
    }
    csv.row({"slope", num(rep.slope), num(rep.slope_se), "", rep.low_confidence ? "1" : "0"});
  }
  const ExponentInput ex(c.model.d, c.model.alpha, c.model.gamma);
  Csv fit(inv.out / "fluctuation_fit.csv",
          {"slope", "slope_se", "ci_lo", "ci_hi", "low_confidence", "bar_xi", "xi_lower_bound"});
  fit.row({num(rep.slope), num(rep.slope_se), num(rep.ci_lo), num(rep.ci_hi),
           rep.low_confidence ? "1" : "0", num(bar_xi(ex)), num(xi_lower_bound(ex))});
  log << "slope=" << num(rep.slope) << " 95% CI [" << num(rep.ci_lo) << ", " << num(rep.ci_hi)
      << "], lower bound max(bar_xi, 1/2)=" << num(xi_lower_bound(ex)) << '\n';
  return kExitOk;
}

int cmd_tilt(const Invocation& inv, std::ostream& log) {
  const ExperimentConfig& c = inv.config;
  require_L_grid(c);
  Csv csv(inv.out / "tilt-experiment.csv",
          {"L", "xi", "lambda_hat", "rn_mean", "rn_stderr", "logdiff_mean", "logdiff_stderr",
           "predicted_exponent", "rn_second_moment", "rn_inverse_moment", "fields_defined",
           "paths_A", "paths_B", "sign_violations", "b_mismatches"});
  const double predicted = tilt_cost_exponent(c.model, c.xi);
  for (std::size_t li = 0; li < c.L_grid.size(); ++li) {
    const double L = c.L_grid[li];
    const TiltSpec spec(c.model, L, c.xi, c.tilt_mode());
    if (c.model.r_max < spec.band_hi) {
      throw ConfigError("r_max " + num(c.model.r_max) + " is below the tilt radius band top " +
                        num(spec.band_hi) + " at L=" + num(L));
    }

    std::vector<double> rn(c.rn_fields);
    parallel_for(rn.size(), inv.threads, [&](std::size_t i) {
      rn[i] = rn_derivative(sample_field(c.model, spec.region,
                                         derive_seed(c.master_seed, kTagRnFields, li, i)),
                            spec);
    });
    const Estimate rn_est = sample_mean(rn);
    const RnMoments moments = rn_moments(spec);

    const PathConfig pc = c.path(L);
    const Window window = path_window(c.model.d, L, c.xi, window_extra(c, L));
    std::vector<double> logdiffs;
    double single_se = 0.0;
    std::size_t paths_A = 0, paths_B = 0, sign = 0, mismatch = 0;
    for (std::size_t f = 0; f < c.fields_per_point; ++f) {
      const TrapField field = grid_field(c, window, li, f);
      const auto added = sample_tilt(spec, derive_seed(c.master_seed, kTagTiltLayer, li, f));
      const PairedTilt pt =
          paired_tilt_comparison(field, spec, added, pc, c.replicas,
                                 derive_seed(c.master_seed, kTagPaths, li, f), inv.threads,
                                 c.bootstrap);
      paths_A += pt.paths_A;
      paths_B += pt.paths_B;
      sign += pt.sign_violations;
      mismatch += pt.b_mismatches;
      if (pt.defined) {
        logdiffs.push_back(pt.logdiff);
        single_se = pt.logdiff_se;
      }
    }
    double ld_mean = std::nan("");
    double ld_se = std::nan("");
    if (logdiffs.size() == 1) {
      ld_mean = logdiffs[0];
      ld_se = single_se;
    } else if (logdiffs.size() > 1) {
      const Estimate e = sample_mean(logdiffs);
      ld_mean = e.mean;
      ld_se = e.std_err;
    }
    csv.row({num(L), num(c.xi), num(spec.lambda_hat), num(rn_est.mean), num(rn_est.std_err),
              num(ld_mean), num(ld_se), num(predicted), num(moments.second), num(moments.inverse),
              std::to_string(logdiffs.size()), std::to_string(paths_A), std::to_string(paths_B),
              std::to_string(sign), std::to_string(mismatch)});
    log << "L=" << num(L) << ": rn mean=" << num(rn_est.mean) << " logdiff=" << num(ld_mean)
        << " (predicted growth exponent " << num(predicted) << ")\n";
  }
  return kExitOk;
}

int cmd_rotation(const Invocation& inv, std::ostream& log) {
  const ExperimentConfig& c = inv.config;
  require_L_grid(c);
  if (c.model.d < 2) throw ConfigError("rotation-test needs d >= 2");
  Csv csv(inv.out / "rotation-test.csv",
          {"L", "xi", "N", "theta", "fields", "center_max", "degenerate", "frequency", "expected",
           "sigma", "within_3sigma"});
  for (std::size_t li = 0; li < c.L_grid.size(); ++li) {
    RotationPlan plan;
    plan.L = c.L_grid[li];
    plan.xi = c.xi;
    plan.N = c.N;
    plan.theta = c.theta;
    plan.fields = c.fields_per_point;
    plan.paths_per_field = c.replicas;
    plan.path = c.path(plan.L);
    const RotationReport r = rotation_exchange_test(
        c.model, plan, derive_seed(c.master_seed, kTagRotation, li), inv.threads);
    csv.row({num(plan.L), num(c.xi), std::to_string(r.N), num(r.theta), std::to_string(r.fields),
              std::to_string(r.center_max), std::to_string(r.degenerate), num(r.frequency),
              num(r.expected), num(r.sigma), r.within_3sigma ? "1" : "0"});
    log << "L=" << num(plan.L) << ": center-max frequency " << num(r.frequency) << " vs "
        << num(r.expected) << '\n';
  }
  return kExitOk;
}

int cmd_kernel_check(const Invocation& inv, std::ostream& log) {
  const ExperimentConfig& c = inv.config;
  const auto dims = static_cast<std::size_t>(c.kernel_dims);
  const double w = c.kernel_width;
  const std::uint64_t seed = derive_seed(c.master_seed, kTagKernel);
  std::vector<KernelQuery> queries(c.kernel_queries);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    Rng rng = split_seed(seed, static_cast<std::int64_t>(q));
    KernelQuery& k = queries[q];
    k.x.resize(dims);
    k.y.resize(dims);
    for (std::size_t j = 0; j < dims; ++j) {
      k.x[j] = (rng.uniform() - 0.5) * w;
      k.y[j] = (rng.uniform() - 0.5) * w;
    }
    k.t = c.kernel_t_min * std::pow(c.kernel_t_max / c.kernel_t_min, rng.uniform());
  }
  std::vector<KernelBoundsReport> reports(queries.size());
  parallel_for(queries.size(), inv.threads, [&](std::size_t q) {
    reports[q] = kernel_bounds_check(queries[q], w, c.lower_threshold);
  });

  Csv csv(inv.out / "kernel-check.csv",
          {"query", "t", "kernel", "upper", "lower", "upper_ok", "lower_checked", "lower_ok",
           "pass"});
  std::size_t failures = 0;
  for (std::size_t q = 0; q < reports.size(); ++q) {
    const auto& r = reports[q];
    const bool pass = r.upper_ok && r.lower_ok;
    failures += !pass;
    csv.row({std::to_string(q), num(queries[q].t), num(r.kernel), num(r.upper), num(r.lower),
              r.upper_ok ? "1" : "0", r.lower_checked ? "1" : "0", r.lower_ok ? "1" : "0",
              pass ? "1" : "0"});
  }
  log << failures << " of " << reports.size() << " queries violate a bound\n";
  if (failures > 0) {
    log << "FAIL kernel-check: " << failures << " bound violation(s), see kernel-check.csv\n";
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_theory(const Invocation& inv, std::ostream& log) {
  const ExperimentConfig& c = inv.config;
  const ExponentInput ex(c.model.d, c.model.alpha, c.model.gamma);
  const Feasibility feas = feasibility(ex, c.xi);
  const double sup = sup_feasible_xi(ex);
  Csv csv(inv.out / "theory.csv",
          {"d", "alpha", "gamma", "bar_xi", "xi_lower_bound", "feasible_lo", "feasible_hi",
           "feasible_hi_closed_form", "p2p_bound", "xi", "cost_feasible", "density_feasible",
           "tilt_cost_exponent"});
  csv.row({std::to_string(ex.d), num(ex.alpha), num(ex.gamma), num(bar_xi(ex)),
            num(xi_lower_bound(ex)), "0", num(sup), num(sup_feasible_xi_closed_form(ex)),
            num(p2p_bound(ex)), num(c.xi), feas.cost ? "1" : "0", feas.density ? "1" : "0",
            num(tilt_cost_exponent(c.model, c.xi))});
  log << "bar_xi=" << num(bar_xi(ex)) << " max(bar_xi, 1/2)=" << num(xi_lower_bound(ex))
      << " feasible xi in (0, " << num(sup) << ") p2p bound=" << num(p2p_bound(ex)) << '\n';
  return kExitOk;
}

int cmd_covariance(const Invocation& inv, std::ostream& log) {
  const ExperimentConfig& c = inv.config;
  if (!(c.s_fit[1] < 2.0 * c.model.r_max)) {
    throw ConfigError("s_fit must end below 2 r_max, where the covariance vanishes");
  }
  {
    Csv csv(inv.out / "covariance.csv", {"s", "analytic", "mc_mean", "mc_stderr"});
    for (std::size_t k = 0; k < c.s_grid.size(); ++k) {
      const double s = c.s_grid[k];
      std::string mc_mean = "nan";
      std::string mc_se = "nan";
      if (c.mc_fields > 0) {
        const Estimate e = mc_covariance(c.model, s, c.mc_fields,
                                         derive_seed(c.master_seed, kTagCovariance, k), 0,
                                         inv.threads);
        mc_mean = num(e.mean);
        mc_se = num(e.std_err);
      }
      csv.row({num(s), num(analytic_covariance(c.model, s)), mc_mean, mc_se});
    }
  }
  const CovarianceSlope slope = covariance_slope(c.model, c.s_fit[0], c.s_fit[1]);
  Csv fit(inv.out / "covariance_fit.csv",
          {"s_lo", "s_hi", "fitted_slope", "derived_slope", "printed_slope"});
  fit.row({num(c.s_fit[0]), num(c.s_fit[1]), num(slope.fitted), num(slope.derived),
           num(slope.printed)});
  log << "log-log slope of Cov(V(0), V(s)) on [" << num(c.s_fit[0]) << ", " << num(c.s_fit[1])
      << "]: fitted " << num(slope.fitted) << ", d - alpha - 2 gamma = " << num(slope.derived)
      << ", d - alpha - gamma = " << num(slope.printed) << '\n';
  return kExitOk;
}

int cmd_validate(const Invocation& inv, std::ostream& log) {
  acceptance::Options options;
  if (inv.seed_given) options.seed = inv.config.master_seed;
  options.threads = inv.threads;
  const auto results = acceptance::run(options, [&](const acceptance::Result& r) {
    log << acceptance::format(r) << '\n';
    log.flush();
  });
  Csv csv(inv.out / "validate.csv", {"id", "name", "gate", "pass", "detail"});
  for (const auto& r : results) {
    std::string detail = r.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    // Timings are left out so that reruns produce identical files.
    csv.row({std::to_string(r.id), r.name, r.gate ? "1" : "0", r.pass ? "1" : "0", detail});
  }
  return acceptance::all_gates_pass(results) ? kExitOk : kExitValidation;
}

}  // namespace

int run_command(const Invocation& inv, std::ostream& log) {
  using Handler = int (*)(const Invocation&, std::ostream&);
  static const std::pair<const char*, Handler> table[] = {
      {"generate", cmd_generate},
      {"estimate-z", cmd_estimate_z},
      {"fluctuation", cmd_fluctuation},
      {"tilt-experiment", cmd_tilt},
      {"rotation-test", cmd_rotation},
      {"kernel-check", cmd_kernel_check},
      {"theory", cmd_theory},
      {"covariance", cmd_covariance},
      {"validate", cmd_validate},
  };
  for (const auto& [name, handler] : table) {
    if (inv.command != name) continue;
    std::filesystem::create_directories(inv.out);
    const int status = handler(inv, log);
    write_manifest(inv);
    return status;
  }
  throw ConfigError("unknown command '" + inv.command + "'");
}

int main_entry(const std::vector<std::string>& args, std::ostream& log, std::ostream& err) {
  CLI::App app{"Simulation experiments for Brownian motion among Poissonian traps", "trapwalk"};
  app.require_subcommand(1);
  std::string config_path;
  std::string seed_text;
  int threads = 0;
  std::string out;
  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed_text, "master seed (overrides the file)");
  app.add_option("--threads", threads, "worker threads (default: TRAPWALK_THREADS or all cores)");
  app.add_option("--out", out, "output directory (overrides the file)");
  const char* names[][2] = {
      {"generate", "sample and save trap fields for each L"},
      {"estimate-z", "estimate Z restricted to events all, A, B, A_theta"},
      {"fluctuation", "transversal fluctuation exponent"},
      {"tilt-experiment", "wide-trap layer: RN mean and paired comparison"},
      {"rotation-test", "exchangeability of Z(A) under small rotations"},
      {"kernel-check", "killed heat kernel against its two-sided bounds"},
      {"theory", "exponent formulas for (d, alpha, gamma)"},
      {"covariance", "potential covariance: closed form, Monte Carlo and slope"},
      {"validate", "run the acceptance suite"},
  };
  for (const auto& [name, help] : names) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    Invocation inv;
    inv.command = app.get_subcommands().front()->get_name();
    inv.config = config_path.empty() ? parse_config_text("") : load_config(config_path);
    if (!seed_text.empty()) {
      inv.config.master_seed = parse_config_text("seed = " + seed_text).master_seed;
      inv.seed_given = true;
    }
    if (!out.empty()) inv.config.output_path = out;
    inv.out = inv.config.output_path;
    if (threads < 0) throw ConfigError("--threads must be >= 0");
    inv.threads = threads;
    return run_command(inv, log);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::overflow_error& e) {
    // Only reachable through settings such as r_max = inf that no sampler can honor.
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}

}  // namespace trapwalk::cli
