#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "trapwalk/sampler.hpp"

using namespace trapwalk;

namespace {

ModelParams free_params(int d = 2) { return ModelParams(d, 3.0, 1.0, 0.5, 64.0); }

PathConfig config(double L, double xi = 0.6, double dt = 1e-2) {
  PathConfig pc;
  pc.L = L;
  pc.xi = xi;
  pc.dt = dt;
  return pc;
}

// CDF of the inverse Gaussian law IG(m, s) with mean m and shape s.
double ig_cdf(double x, double m, double s) {
  const double a = std::sqrt(s / x);
  auto Phi = [](double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); };
  return Phi(a * (x / m - 1.0)) + std::exp(2.0 * s / m) * Phi(-a * (x / m + 1.0));
}

}  // namespace

TEST(FreeMotion, MatchesLaplaceTransformOfHittingTime) {
  const ModelParams p = free_params();
  const PathConfig pc = config(2.0);
  const TrapField field = TrapField::empty(p, required_window(2, pc.L, pc.xi));
  const auto z = estimate_Z(field, pc, 100000, Event::all(), 2024);
  const double exact = oracle::laplace_hitting(2.0, 0.5);
  EXPECT_NEAR(exact, std::exp(-2.0), 1e-15);
  EXPECT_NEAR(z.z.mean, exact, 3.0 * z.z.std_err);
  EXPECT_LE(z.z.std_err, 0.02 * z.z.mean);
  EXPECT_EQ(z.hits, 100000u);
}

TEST(FreeMotion, DegenerateTarget) {
  const ModelParams p = free_params();
  const PathConfig pc = config(0.0);
  const TrapField field = TrapField::empty(p, required_window(2, 0.0, 0.6));
  Rng rng = split_seed(1, 0);
  const auto r = simulate_path(field, resolve_config(p, pc), rng);
  EXPECT_TRUE(r.hit);
  EXPECT_EQ(r.T, 0.0);
  EXPECT_EQ(r.fk_weight(), 1.0);
}

TEST(Bridge, HittingTimeIsExactAtCoarseSteps) {
  // Under drift mu the first passage time of L is IG(L/mu, L^2), whatever dt.
  const ModelParams p = free_params();
  for (double dt : {0.25, 0.05}) {
    PathConfig pc = config(2.0, 0.6, dt);
    pc.drift = 1.0;
    const TrapField field = TrapField::empty(p, required_window(2, pc.L, pc.xi));
    const auto paths = simulate_paths(field, resolve_config(p, pc), 100000, 99);
    std::vector<double> T;
    for (const auto& r : paths) {
      ASSERT_TRUE(r.hit);
      ASSERT_EQ(r.end[0], 2.0);
      T.push_back(r.T);
    }
    const Estimate m = sample_mean(T);
    EXPECT_NEAR(m.mean, 2.0, 3.0 * m.std_err) << "dt=" << dt;
    for (double s : {0.5, 1.0, 2.0, 4.0}) {
      double below = 0.0;
      for (double t : T) below += t <= s;
      below /= static_cast<double>(T.size());
      const double ref = ig_cdf(s, 2.0, 4.0);
      EXPECT_NEAR(below, ref, 4.0 * std::sqrt(ref * (1.0 - ref) / T.size())) << "dt=" << dt << " s=" << s;
    }
  }
}

TEST(Girsanov, DriftsAgreeInARandomField) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 64.0);
  const PathConfig base = config(4.0, 0.6, 0.05);
  const TrapField field = sample_field(p, path_window(2, 4.0, 0.6, 6.0), 8);
  ASSERT_GT(field.size(), 0u);
  std::vector<ZEstimate> zs;
  for (double mu : {0.0, 1.0, 1.5}) {
    PathConfig pc = base;
    pc.drift = mu;
    zs.push_back(estimate_Z(field, pc, 10000, Event::all(), 404));
  }
  for (std::size_t i = 1; i < zs.size(); ++i) {
    const double tol = 3.0 * std::hypot(zs[0].z.std_err, zs[i].z.std_err);
    EXPECT_NEAR(zs[i].z.mean, zs[0].z.mean, tol) << "drift index " << i;
  }
}

TEST(Events, TubeAndAvoidanceAreDisjointAndBoundedByAll) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 64.0);
  const PathConfig pc = config(8.0, 0.6, 0.05);
  const TrapField field = sample_field(p, path_window(2, 8.0, 0.6, 8.0), 3);
  const auto rc = resolve_config(p, pc);
  for (const auto& r : simulate_paths(field, rc, 2000, 6)) {
    if (r.hit) EXPECT_FALSE(r.in_A && r.in_B);
  }
  const auto all = estimate_Z(field, pc, 5000, Event::all(), 7);
  const auto a = estimate_Z(field, pc, 5000, Event::a(), 7);
  const auto b = estimate_Z(field, pc, 5000, Event::b(), 7);
  EXPECT_LE(a.z.mean + b.z.mean, all.z.mean + 3.0 * std::hypot(all.z.std_err, a.z.std_err, b.z.std_err));
  EXPECT_GT(a.in_event, 0u);
}

TEST(Events, TubeShareGrowsWithXi) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 64.0);
  const double L = 6.0;
  const TrapField field = sample_field(p, path_window(2, L, 0.99, 8.0), 12);
  double prev = 0.0;
  for (double xi : {0.5, 0.7, 0.9, 0.99}) {
    const PathConfig pc = config(L, xi, 0.05);
    const auto all = estimate_Z(field, pc, 5000, Event::all(), 5);
    const auto a = estimate_Z(field, pc, 5000, Event::a(), 5);
    const double ratio = a.z.mean / all.z.mean;
    EXPECT_GE(ratio, prev - 3.0 * a.rel_err * ratio) << "xi=" << xi;
    prev = ratio;
  }
  EXPECT_GT(prev, 0.5);
}

TEST(Paths, FeynmanKacWeightBoundedByKilling) {
  const ModelParams p(2, 2.5, 0.5, 0.3, 64.0);
  const PathConfig pc = config(10.0);
  const TrapField field = sample_field(p, path_window(2, 10.0, 0.6, 10.0), 21);
  for (const auto& r : simulate_paths(field, resolve_config(p, pc), 2000, 22)) {
    EXPECT_LE(r.log_fk, -p.lambda * r.T + 1e-12);
  }
}

TEST(Paths, ThreadCountDoesNotChangeResults) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 64.0);
  const PathConfig pc = config(6.0);
  const TrapField field = sample_field(p, path_window(2, 6.0, 0.6, 6.0), 2);
  const auto one = estimate_Z(field, pc, 3000, Event::all(), 11, 1);
  const auto four = estimate_Z(field, pc, 3000, Event::all(), 11, 4);
  EXPECT_EQ(one.z.mean, four.z.mean);
  EXPECT_EQ(one.z.std_err, four.z.std_err);
  EXPECT_EQ(one.z.ess, four.z.ess);
}

TEST(Paths, AddingATrapNeverRaisesAWeight) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 64.0);
  const PathConfig pc = config(6.0);
  const Window w = path_window(2, 6.0, 0.6, 6.0);
  const TrapField field = sample_field(p, w, 30);
  auto traps = field.traps();
  traps.push_back(Trap{{3.0, 0.0}, 2.0});
  const TrapField more = TrapField::from_traps(p, w, traps);
  const auto rc = resolve_config(p, pc);
  const auto a = simulate_paths(field, rc, 2000, 31);
  const auto b = simulate_paths(more, rc, 2000, 31);
  std::size_t lowered = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].T, b[i].T);
    EXPECT_LE(b[i].log_fk, a[i].log_fk);
    lowered += b[i].log_fk < a[i].log_fk;
  }
  EXPECT_GT(lowered, 0u);
}

TEST(Budget, RejectsShortBudgetsAndBadConfigs) {
  const ModelParams p = free_params();
  PathConfig pc = config(10.0);
  pc.max_steps = 10;
  EXPECT_THROW(resolve_config(p, pc), std::invalid_argument);
  pc.max_steps = 0;
  EXPECT_GE(static_cast<double>(resolve_config(p, pc).max_steps) * pc.dt,
            (10.0 + std::log(1e6)) / 0.5 - pc.dt);
  PathConfig bad = config(10.0, 1.0);
  EXPECT_THROW(resolve_config(p, bad), std::invalid_argument);
  bad = config(10.0, 0.5, 0.0);
  EXPECT_THROW(resolve_config(p, bad), std::invalid_argument);
  bad = config(10.0);
  bad.drift = -1.0;
  EXPECT_THROW(resolve_config(p, bad), std::invalid_argument);
  // A budget that only the drifted hitting time justifies.
  PathConfig fast = config(10.0);
  fast.drift = 2.0;
  fast.max_steps = 1500;
  EXPECT_NO_THROW(resolve_config(p, fast));
}

TEST(Budget, FieldMustCoverThePaddedTube) {
  const ModelParams p = free_params();
  const PathConfig pc = config(10.0);
  const TrapField small = TrapField::empty(p, Window({-1.0, -1.0}, {11.0, 1.0}));
  Rng rng = split_seed(1, 0);
  EXPECT_THROW(simulate_path(small, resolve_config(p, pc), rng), std::invalid_argument);
  EXPECT_THROW(estimate_Z(small, pc, 10, Event::all(), 1), std::invalid_argument);
  EXPECT_THROW(estimate_Z(small, pc, 0, Event::all(), 1), std::invalid_argument);
}

TEST(HittingSurvival, MatchesInverseGaussianTail) {
  for (double t : {0.5, 2.0, 5.0}) {
    EXPECT_NEAR(hitting_time_survival(2.0, 1.0, t), 1.0 - ig_cdf(t, 2.0, 4.0), 1e-12);
  }
  EXPECT_NEAR(hitting_time_survival(1.0, 0.0, 1.0), 1.0 - 0.3173105078629141, 1e-12);
}

TEST(Slabs, OccupationMatchesBallisticCrossing) {
  const ModelParams p = free_params(1);
  const PathConfig pc = config(20.0);
  const TrapField field = TrapField::empty(p, required_window(1, pc.L, pc.xi));
  const double w = std::pow(20.0, 0.6);
  const auto occ = slab_occupation_stats(field, pc, 7.0, 20000, 3, false);
  EXPECT_NEAR(occ.occupation.mean, w / std::sqrt(2.0 * p.lambda), 0.1 * w);
  EXPECT_NEAR(occ.occupation.mean, w, 3.0 * occ.occupation.std_err);
  EXPECT_THROW(slab_occupation_stats(field, pc, -1.0, 10, 3), std::invalid_argument);
  EXPECT_THROW(slab_occupation_stats(field, pc, 20.0 - w + 0.5, 10, 3), std::invalid_argument);
}

TEST(Slabs, PartitionSumsToHittingTime) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 64.0);
  PathConfig pc = config(10.0);
  const double inf = std::numeric_limits<double>::infinity();
  pc.slab_edges = {-inf, 0.0, 2.5, 5.0, 7.5, 10.0, inf};
  const TrapField field = sample_field(p, path_window(2, 10.0, 0.6, 10.0), 4);
  for (const auto& r : simulate_paths(field, resolve_config(p, pc), 500, 5)) {
    double s = 0.0;
    for (double v : r.slab_times) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, r.T, 1e-9 * std::max(1.0, r.T));
    EXPECT_EQ(r.slab_times.back(), 0.0);
  }
}

TEST(Rotation, ZeroAngleTiesEverywhere) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 16.0);
  RotationPlan plan;
  plan.L = 8.0;
  plan.xi = 0.6;
  plan.theta = 0.0;
  plan.fields = 5;
  plan.paths_per_field = 50;
  const auto rep = rotation_exchange_test(p, plan, 1);
  EXPECT_EQ(rep.degenerate, 5u);
  EXPECT_EQ(rep.center_max, 5u);
  EXPECT_DOUBLE_EQ(rep.expected, 1.0 / 3.0);
  for (int i : rep.argmax) EXPECT_EQ(i, 0);
}

TEST(Rotation, AngleAndPreconditions) {
  EXPECT_NEAR(rotation_angle(2, 100.0, 0.5), 10.0 * std::sqrt(2.0) / 10.0, 1e-12);
  RotationPlan plan;
  plan.N = 0;
  EXPECT_THROW(rotation_exchange_test(free_params(), plan, 1), std::invalid_argument);
  EXPECT_THROW(rotation_exchange_test(free_params(1), RotationPlan{}, 1), std::invalid_argument);
}

TEST(Rotation, RotatedEventNeedsCoverage) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 16.0);
  const PathConfig pc = config(8.0);
  const Window need = required_window(2, 8.0, 0.6);
  const TrapField tight = sample_field(p, need, 3);
  EXPECT_NO_THROW(estimate_Z(tight, pc, 10, Event::a_theta(0.0), 1));
  EXPECT_THROW(estimate_Z(tight, pc, 10, Event::a_theta(0.3), 1), std::invalid_argument);
  EXPECT_TRUE(covered_after_rotation(Window({-21, -21}, {21, 21}), need, 0.3));
  EXPECT_FALSE(covered_after_rotation(Window({-20, -20}, {20, 20}), need, 0.3));
}

TEST(Fluctuation, GridPreconditions) {
  FluctuationPlan plan;
  plan.L_grid = {16.0};
  EXPECT_THROW(measure_fluctuation(free_params(), plan, 1), std::invalid_argument);
  plan.L_grid = {8.0, 16.0, 12.0};
  EXPECT_THROW(measure_fluctuation(free_params(), plan, 1), std::invalid_argument);
  plan.L_grid = {8.0, 16.0, 32.0};
  EXPECT_THROW(measure_fluctuation(free_params(1), plan, 1), std::invalid_argument);
}

TEST(Fluctuation, FreeMotionIsRoughlyDiffusive) {
  FluctuationPlan plan;
  plan.L_grid = {8.0, 16.0, 32.0, 64.0};
  plan.free_motion = true;
  plan.fields = 4;
  plan.paths_per_field = 500;
  plan.bootstrap = 200;
  plan.path.dt = 0.05;
  const auto rep = measure_fluctuation(free_params(), plan, 9);
  EXPECT_NEAR(rep.slope, 0.5, 0.1);
  EXPECT_LE(rep.ci_lo, rep.slope);
  EXPECT_GE(rep.ci_hi, rep.slope);
}
