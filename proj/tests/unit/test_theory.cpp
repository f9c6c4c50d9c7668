#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "trapwalk/theory.hpp"

using namespace trapwalk;

TEST(BarXi, Examples) {
  EXPECT_NEAR(bar_xi(ExponentInput(2, 2.5, 0.3)), 1.0 / 1.5, 1e-15);
  EXPECT_NEAR(bar_xi(ExponentInput(2, 4.0, 1.0)), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(xi_lower_bound(ExponentInput(2, 4.0, 1.0)), 0.5);
  EXPECT_NEAR(bar_xi(ExponentInput(2, 2.2, 0.1)), 1.0 / 1.2, 1e-15);
  EXPECT_NEAR(bar_xi(ExponentInput(3, 1.0, 2.5)), 0.5, 1e-15);
  EXPECT_THROW(ExponentInput(2, 1.0, 1.0), std::invalid_argument);
}

TEST(BarXi, BranchesMeetAtBoundary) {
  for (int d = 1; d <= 4; ++d) {
    for (double alpha = d + 0.1; alpha < d + 5.0; alpha += 0.37) {
      const double g = alpha - d;
      const double below = bar_xi(ExponentInput(d, alpha, g));
      const double above = bar_xi(ExponentInput(d, alpha, std::nextafter(g, 10.0)));
      EXPECT_NEAR(below, 1.0 / (1.0 + alpha - d), 1e-12);
      EXPECT_NEAR(below, above, 1e-12);
    }
  }
}

TEST(Feasibility, Examples) {
  const ExponentInput in(2, 2.5, 0.3);
  EXPECT_TRUE(feasibility(in, 0.6).both());
  const auto f = feasibility(in, 0.7);
  EXPECT_FALSE(f.density);
  EXPECT_TRUE(feasibility(in, 1e-9).both());
}

TEST(SupFeasible, ExamplesAndClosedForm) {
  // (3, 1, 2) itself has alpha + gamma - d = 0 and is rejected; approach it.
  EXPECT_THROW(ExponentInput(3, 1.0, 2.0), std::invalid_argument);
  EXPECT_NEAR(sup_feasible_xi(ExponentInput(3, 1.0, 2.0 + 1e-10)), 0.6, 1e-9);
  for (int d = 1; d <= 3; ++d) {
    for (double alpha = 0.3; alpha < 6.0; alpha += 0.29) {
      for (double gamma = 0.1; gamma < 4.0; gamma += 0.31) {
        if (alpha + gamma - d <= 1e-9) continue;
        const ExponentInput in(d, alpha, gamma);
        const double s = sup_feasible_xi(in);
        EXPECT_NEAR(s, sup_feasible_xi_closed_form(in), 1e-9);
        EXPECT_NEAR(s, std::min(1.0, bar_xi(in)), 1e-9);
      }
    }
  }
}

TEST(P2pBound, ExamplesAndIdentity) {
  const ExponentInput in(2, 2.0, 0.5);
  EXPECT_DOUBLE_EQ(p2p_bound(in), 0.5);
  for (double alpha : {2.5, 3.0, 4.2}) {
    for (double gamma : {0.2, 0.7, 1.3}) {
      const ExponentInput e(2, alpha, gamma);
      const double xi = p2p_bound(e);
      EXPECT_NEAR(((e.d + 1.0 - alpha - 2.0 * gamma) * xi + 1.0) / 2.0, xi, 1e-12);
      EXPECT_LE(xi, 3.0 / (3.0 + alpha + 2.0 * gamma - e.d));
    }
  }
}

TEST(Overlap, ClosedFormsMatchIncompleteBeta) {
  for (int d : {1, 2, 3}) {
    for (double r : {1.0, 2.5, 10.0}) {
      for (double s : {0.0, 0.3, 1.0, 1.9 * r, 2.0 * r, 3.0 * r}) {
        EXPECT_NEAR(ball_overlap(d, s, r), ball_overlap_general(d, s, r), 1e-10 * std::pow(r, d))
            << "d=" << d << " s=" << s << " r=" << r;
      }
    }
  }
  EXPECT_NEAR(ball_overlap(2, 0.0, 1.0), std::numbers::pi, 1e-14);
  EXPECT_NEAR(ball_overlap(4, 0.0, 2.0), unit_ball_volume(4) * 16.0, 1e-12);
}

TEST(AnalyticCovariance, VarianceAtZero) {
  const ModelParams p(1, 1.5, 1.0, 0.5, INFINITY);
  EXPECT_NEAR(analytic_covariance(p, 0.0), 1.2, 1e-9);
}

TEST(AnalyticCovariance, VanishesBeyondTwiceRmax) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 10.0);
  EXPECT_EQ(analytic_covariance(p, 20.5), 0.0);
  double prev = INFINITY;
  for (double s = 0.0; s < 21.0; s += 0.5) {
    const double c = analytic_covariance(p, s);
    EXPECT_LE(c, prev);
    prev = c;
  }
}

TEST(AnalyticCovariance, SlopeIsDMinusAlphaMinusTwoGamma) {
  const ModelParams p(1, 1.5, 1.0, 0.5, 1e4);
  const auto sl = covariance_slope(p, 10.0, 100.0);
  EXPECT_NEAR(sl.fitted, -2.5, 0.1);
  EXPECT_EQ(sl.derived, -2.5);
  EXPECT_EQ(sl.printed, -1.5);
}

TEST(McCovariance, MatchesCampbellAndIsIsotropic) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 50.0);
  for (double s : {0.0, 2.0, 5.0}) {
    const auto e = mc_covariance(p, s, 10000, 77);
    EXPECT_NEAR(e.mean, analytic_covariance(p, s), 3.0 * e.std_err) << "s=" << s;
  }
  const auto e1 = mc_covariance(p, 2.0, 10000, 5, 0);
  const auto e2 = mc_covariance(p, 2.0, 10000, 6, 1);
  EXPECT_NEAR(e1.mean, e2.mean, 3.0 * std::hypot(e1.std_err, e2.std_err));
  EXPECT_THROW(mc_covariance(p, 1.0, 100, 1, 2), std::invalid_argument);
}

TEST(McCovariance, ZeroLagIsSampleVariance) {
  const ModelParams p(2, 3.0, 1.0, 0.5, 20.0);
  const auto e = mc_covariance(p, 0.0, 2000, 3);
  EXPECT_GT(e.mean, 0.0);
}

TEST(Ols, Slope) {
  EXPECT_NEAR(ols_slope({0, 1, 2, 3}, {1, 3, 5, 7}), 2.0, 1e-14);
  EXPECT_THROW(ols_slope({1}, {1}), std::invalid_argument);
}
