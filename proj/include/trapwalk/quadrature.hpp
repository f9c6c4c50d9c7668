#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace trapwalk {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive Gauss-Kronrod (61 point) integral of f over [a, b]; either bound
/// may be infinite. rel_tol is the refinement target. Throws QuadratureError
/// when the final error estimate exceeds max(100 rel_tol, 1e-8) relative to
/// the L1 norm of the integrand (kinks can stall refinement short of the
/// target without making the result unusable).
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 unsigned max_depth = 30) {
  if (a == b) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, max_depth, rel_tol, &error, &l1);
  if (!std::isfinite(value) || error > std::max(100.0 * rel_tol, 1e-8) * l1 + 1e-300) {
    throw QuadratureError("quadrature did not converge on [" + std::to_string(a) +
                          ", " + std::to_string(b) + "]: error estimate " +
                          std::to_string(error) + " vs L1 " + std::to_string(l1));
  }
  return value;
}

}  // namespace trapwalk
