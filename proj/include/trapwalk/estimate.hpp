#pragma once

#include <cstddef>
#include <span>

namespace trapwalk {

/// Weighted Monte Carlo average.
struct Estimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
  double ess = 0.0;  // (sum w)^2 / sum w^2 for weighted averages, n otherwise
  bool low_confidence = false;
};

inline constexpr double kMinEss = 30.0;

/// Plain sample mean with standard error sd / sqrt(n).
Estimate sample_mean(std::span<const double> x);

/// Self-normalized average sum w_i x_i / sum w_i given log-weights, with a
/// delta-method standard error. Flags low confidence when ess < kMinEss.
Estimate weighted_mean(std::span<const double> x, std::span<const double> log_w);

}  // namespace trapwalk
