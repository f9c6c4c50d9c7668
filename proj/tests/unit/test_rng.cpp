#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "trapwalk/rng.hpp"

using namespace trapwalk;

TEST(Rng, SameSeedAndIndexGiveSameStream) {
  Rng a = split_seed(42, 7);
  Rng b = split_seed(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, DistinctIndicesDiffer) {
  Rng a = split_seed(42, 7);
  Rng b = split_seed(42, 8);
  Rng c = split_seed(43, 7);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a(), y = b(), z = c();
    same_ab += x == y;
    same_ac += x == z;
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
}

TEST(Rng, RejectsBadIndices) {
  EXPECT_THROW(split_seed(1, -1), std::out_of_range);
  EXPECT_THROW(split_seed(1, kMaxStreamIndex + 1), std::out_of_range);
  EXPECT_NO_THROW(split_seed(1, kMaxStreamIndex));
  EXPECT_THROW(nested_stream_index(kMaxStreamIndex, 1, 2), std::overflow_error);
  EXPECT_THROW(nested_stream_index(1, 5, 5), std::out_of_range);
  EXPECT_EQ(nested_stream_index(3, 4, 10), 34);
}

TEST(Rng, UniformIsInOpenUnitInterval) {
  Rng r = split_seed(3, 0);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / 100000));
}

TEST(Rng, NormalMoments) {
  Rng r = split_seed(5, 1);
  const int n = 200000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s1 += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}

TEST(Rng, PoissonRejectsBadMean) {
  Rng r = split_seed(1, 0);
  EXPECT_THROW(r.poisson(-1.0), std::invalid_argument);
  EXPECT_THROW(r.poisson(INFINITY), std::invalid_argument);
  EXPECT_EQ(r.poisson(0.0), 0u);
}

TEST(Rng, DeriveSeedSeparatesAddresses) {
  EXPECT_NE(derive_seed(1, 0, 0, 1), derive_seed(1, 0, 1, 0));
  EXPECT_NE(derive_seed(1, 1, 0, 0), derive_seed(1, 0, 0, 0));
  EXPECT_EQ(derive_seed(9, 2, 3, 4), derive_seed(9, 2, 3, 4));
}

// 10^4 streams, first 10^3 uniforms each; correlation of neighbouring streams.
// Independent streams give rho ~ N(0, 1/1000), so |rho| < 0.05 holds for about
// 89% of pairs and the checks are on the distribution of rho.
TEST(Rng, NeighbouringStreamsAreUncorrelated) {
  constexpr int kStreams = 10000;
  constexpr int kDraws = 1000;
  std::vector<double> prev(kDraws), cur(kDraws);
  auto fill = [](std::vector<double>& v, int index) {
    Rng r = split_seed(2024, index);
    double mean = 0.0;
    for (double& x : v) mean += (x = r.uniform());
    mean /= kDraws;
    double ss = 0.0;
    for (double& x : v) ss += (x -= mean) * x;
    for (double& x : v) x /= std::sqrt(ss);
  };
  fill(prev, 0);
  double sum = 0.0, sum2 = 0.0, worst = 0.0;
  int above = 0;
  for (int i = 1; i < kStreams; ++i) {
    fill(cur, i);
    double rho = 0.0;
    for (int k = 0; k < kDraws; ++k) rho += prev[k] * cur[k];
    sum += rho;
    sum2 += rho * rho;
    worst = std::max(worst, std::abs(rho));
    above += std::abs(rho) >= 0.05;
    std::swap(prev, cur);
  }
  const double pairs = kStreams - 1;
  const double sd = 1.0 / std::sqrt(static_cast<double>(kDraws));
  EXPECT_LT(std::abs(sum / pairs), 4.0 * sd / std::sqrt(pairs));
  EXPECT_NEAR(std::sqrt(sum2 / pairs), sd, 0.05 * sd);
  EXPECT_NEAR(above / pairs, 0.1138, 0.02);
  EXPECT_LT(worst, 0.2);
}
