#include "trapwalk/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace trapwalk {

Estimate sample_mean(std::span<const double> x) {
  Estimate e;
  e.n = x.size();
  e.ess = static_cast<double>(e.n);
  if (x.empty()) {
    e.low_confidence = true;
    return e;
  }
  double sum = 0.0;
  for (double v : x) sum += v;
  e.mean = sum / static_cast<double>(e.n);
  if (e.n > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - e.mean) * (v - e.mean);
    e.std_err = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  }
  return e;
}

Estimate weighted_mean(std::span<const double> x, std::span<const double> log_w) {
  if (x.size() != log_w.size()) throw std::invalid_argument("weighted_mean: size mismatch");
  Estimate e;
  e.n = x.size();
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_w) top = std::max(top, lw);
  if (x.empty() || !std::isfinite(top)) {
    e.low_confidence = true;
    return e;
  }
  std::vector<double> w(x.size());
  double sw = 0.0;
  double sw2 = 0.0;
  double swx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    w[i] = std::exp(log_w[i] - top);
    sw += w[i];
    sw2 += w[i] * w[i];
    swx += w[i] * x[i];
  }
  e.mean = swx / sw;
  e.ess = sw * sw / sw2;
  double var = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = w[i] * (x[i] - e.mean);
    var += r * r;
  }
  e.std_err = std::sqrt(var) / sw;
  e.low_confidence = e.ess < kMinEss;
  return e;
}

}  // namespace trapwalk
