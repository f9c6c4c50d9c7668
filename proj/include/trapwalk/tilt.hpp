#pragma once

#include <cstdint>
#include <vector>

#include "trapwalk/env.hpp"
#include "trapwalk/estimate.hpp"
#include "trapwalk/sampler.hpp"

namespace trapwalk {

enum class TiltMode {
  PointToPlane,  // region [L/2, L] x [-L^xi/2, L^xi/2]^(d-1)
  PointToPoint,  // region [L/4, 3L/4] x [-L^xi/2, L^xi/2]^(d-1)
};

/// Geometry and intensity of the added layer of wide traps. The layer is a
/// Poisson process of intensity L^-kappa on region x radius_band.
struct TiltSpec {
  ModelParams params;
  double L = 0.0;
  double xi = 0.5;
  TiltMode mode = TiltMode::PointToPlane;
  Window region;
  double band_lo = 0.0;  // sqrt(d) L^xi
  double band_hi = 0.0;  // 2 sqrt(d) L^xi
  double kappa = 0.0;    // ((d + 1 + alpha) xi + 1) / 2
  double intensity = 0.0;
  double lambda_hat = 0.0;  // (sqrt(d)/2) L^(((d - 1 - alpha) xi + 1)/2)

  /// Throws std::invalid_argument unless L >= 0, xi in (0, 1) and
  /// (d - 1 - alpha) xi + 1 > 0. L = 0 gives an empty layer.
  TiltSpec(const ModelParams& params, double L, double xi,
           TiltMode mode = TiltMode::PointToPlane);

  /// intensity * |region| * band width; equals lambda_hat.
  double lambda_hat_from_volume() const;
  bool in_band(double r) const { return r >= band_lo && r <= band_hi; }
  /// alpha^-1 r^(1 + alpha) L^-kappa, the intensity ratio minus one at radius r.
  double excess(double r) const;
};

/// Poisson(lambda_hat) traps, centers uniform on the region, radii uniform on
/// the band.
std::vector<Trap> sample_tilt(const TiltSpec& spec, std::uint64_t seed);

/// Traps of `field` with center in the region and radius in the band.
std::size_t count_in_band(const TrapField& field, const TiltSpec& spec);
std::size_t count_in_band(const std::vector<Trap>& traps, const TiltSpec& spec);

/// log of prod_{region x band} (1 + excess(r_i)) - lambda_hat over the points
/// of `field`. Throws std::invalid_argument if r_max < band_hi or the field
/// window does not contain the region (the band would be under-sampled).
double log_rn_derivative(const TrapField& field, const TiltSpec& spec);
double rn_derivative(const TrapField& field, const TiltSpec& spec);

/// Same product over an explicit list of points (e.g. base plus added layer).
double log_rn_derivative(const std::vector<Trap>& traps, const TiltSpec& spec);

struct RnMoments {
  double second = 0.0;   // E_base[rn^2] = exp(int excess^2 dmu)
  double inverse = 0.0;  // E_base[1/rn] = exp(int excess^2 / (1 + excess) dmu)
};

/// Closed forms over the base intensity mu = Lebesgue(region) x alpha r^(-alpha-1) dr on the band.
RnMoments rn_moments(const TiltSpec& spec);

struct SlabCoverage {
  bool covered = false;
  double a = 0.0;        // slab anchor: [a, a + L^xi] x [-L^xi/2, L^xi/2]^(d-1)
  double margin = 0.0;   // radius minus the farthest slab corner distance
  bool clamped = false;  // anchor moved to keep the slab inside the region
};

/// Anchors the slab at center_1 - L^xi/2 clamped to [region_lo, region_hi - L^xi]
/// and checks that the ball contains every slab corner.
SlabCoverage slab_coverage_check(const TiltSpec& spec, const Trap& trap);

struct PairedTilt {
  bool defined = false;  // at least one path in the tube event
  double log_z_base = 0.0;
  double log_z_tilt = 0.0;
  double logdiff = 0.0;     // log Z(A) - log Z-tilde(A)
  double logdiff_se = 0.0;  // bootstrap over paths
  std::size_t paths_A = 0;
  std::size_t paths_B = 0;
  std::size_t sign_violations = 0;  // paths whose tilted weight exceeds the base weight
  std::size_t b_mismatches = 0;     // B paths that picked up any added potential
  Estimate added_integral;          // path-measure mean of int V-hat over A paths
};

/// Runs n paths once in `field`; each tube path contributes its weight w to
/// the base estimate and w exp(-int V-hat) to the tilted one, where V-hat is
/// the potential of the `added` traps along the same path.
PairedTilt paired_tilt_comparison(const TrapField& field, const TiltSpec& spec,
                                  const std::vector<Trap>& added, const PathConfig& config,
                                  std::size_t n, std::uint64_t seed, int threads = 0,
                                  std::size_t bootstrap = 200);

/// ((d + 1 - alpha - 2 gamma) xi + 1) / 2
double tilt_cost_exponent(const ModelParams& params, double xi);

}  // namespace trapwalk
