#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "trapwalk/env.hpp"
#include "trapwalk/estimate.hpp"
#include "trapwalk/rng.hpp"

namespace trapwalk {

enum class Target {
  Hyperplane,  // first hitting of {x_1 = L}
  Ball,        // first step end inside B(L e_1, 1)
};

struct PathConfig {
  double L = 10.0;
  double xi = 0.6;
  double dt = 1e-2;
  std::optional<double> drift;  // defaults to sqrt(2 lambda)
  std::int64_t max_steps = 0;   // 0 selects the budget rule of resolve_config
  Target target = Target::Hyperplane;
  /// Increasing x_1 edges; slab k is [edges[k], edges[k+1]). Infinite edges
  /// are allowed.
  std::vector<double> slab_edges;
  /// Count slab time only while the transversal coordinates are in the tube.
  bool slab_tube_only = false;
  /// End the path (as a miss) as soon as a step point leaves the tube.
  bool stop_on_tube_exit = false;
};

/// PathConfig with defaults filled in and the step budget checked.
struct ResolvedConfig {
  PathConfig path;
  double drift = 0.0;
  std::int64_t max_steps = 0;
  double tube_half = 0.0;    // L^xi / 2
  double block_margin = 0.0; // 2 sqrt(d) L^xi
  Window block;              // the block C-bar whose neighbourhood defines event B
};

/// Lower tail bound used by the budget rule: P(T_L > t) for Brownian motion
/// with drift mu >= 0 started at 0, T_L the hitting time of level L.
double hitting_time_survival(double L, double mu, double t);

/// Validates `config` for `params` and resolves the drift and step budget.
/// A budget t = max_steps * dt is accepted when either the drifted hitting
/// time exceeds t with probability <= 1e-6, or the killing alone makes the
/// weight lost beyond t at most 1e-6 of the free-motion partition function
/// (lambda t >= L sqrt(2 lambda) + log 1e6). When max_steps is 0, the smallest
/// budget meeting the second rule is used. Throws std::invalid_argument.
ResolvedConfig resolve_config(const ModelParams& params, const PathConfig& config);

/// The box the field must contain: [-p, L + p] x [-(L^xi/2 + p), L^xi/2 + p]^(d-1)
/// with p = 2 sqrt(d) L^xi.
Window required_window(int d, double L, double xi);

/// required_window widened transversally by `extra` on each side, which keeps
/// free (untubed) paths inside the sampled region most of the time.
Window path_window(int d, double L, double xi, double extra);

/// Transversal widening that keeps untubed paths inside the sampled region:
/// four standard deviations of the transversal motion over the typical
/// crossing time L / drift (L^2 when drift is 0).
double default_window_extra(double L, double drift);

/// required_window with the first two coordinates widened to [-rho, rho],
/// rho the largest norm of a corner in that plane, so that every rotation of
/// a field sampled on it still covers required_window.
Window rotation_box(int d, double L, double xi);

struct PathResult {
  bool hit = false;
  double T = 0.0;
  double log_fk = 0.0;        // -int (V + lambda) dt
  double log_girsanov = 0.0;  // -mu X^1_T + mu^2 T / 2
  double trans_max = 0.0;     // max over step points of max_{j >= 2} |x_j|
  bool in_A = true;
  bool in_B = true;
  bool left_window = false;
  bool exhausted = false;
  std::int64_t steps = 0;
  double probe_integral = 0.0;  // int V of the optional probe field
  std::vector<double> slab_times;
  Point end;

  double fk_weight() const;
  double girsanov() const;
  /// log of girsanov * fk_weight; -inf for misses.
  double log_weight() const;
};

/// One killed-Brownian trajectory from the origin with drift on coordinate 1.
/// Steps are exact Gaussian increments; V is sampled at step midpoints. The
/// hyperplane crossing inside a step is detected and timed exactly from the
/// Brownian bridge between the step ends. If `probe` is given, the integral
/// of its potential along the same path is accumulated in probe_integral.
/// Throws std::invalid_argument if the field window misses required_window.
PathResult simulate_path(const TrapField& field, const ResolvedConfig& config, Rng& rng,
                         const TrapField* probe = nullptr);

struct Event {
  enum class Kind { All, A, B, ATheta };
  Kind kind = Kind::All;
  double theta = 0.0;

  static Event all() { return {}; }
  static Event a() { return {Kind::A, 0.0}; }
  static Event b() { return {Kind::B, 0.0}; }
  static Event a_theta(double theta) { return {Kind::ATheta, theta}; }
};

struct ZEstimate {
  Estimate z;                // mean and standard error of girsanov * fk_weight * 1{event}
  double log_mean = 0.0;     // log of z.mean, finite even when z.mean underflows
  double rel_err = 0.0;      // std_err / mean
  std::size_t hits = 0;
  std::size_t in_event = 0;
  double exhausted_rate = 0.0;
  double left_window_rate = 0.0;
};

/// Z restricted to an event, over n paths with streams split_seed(seed, i).
/// The A_theta event is evaluated as the tube event in the field rotated by
/// -theta. Results do not depend on the thread count.
ZEstimate estimate_Z(const TrapField& field, const PathConfig& config, std::size_t n,
                     Event event, std::uint64_t seed, int threads = 0);

/// Per-path results in index order, for callers that need more than Z.
std::vector<PathResult> simulate_paths(const TrapField& field, const ResolvedConfig& config,
                                       std::size_t n, std::uint64_t seed, int threads = 0,
                                       const TrapField* probe = nullptr);

/// Log-space reduction of unnormalized weights (-inf entries count as zero).
ZEstimate reduce_log_weights(const std::vector<double>& log_w);

struct FluctuationPoint {
  double L = 0.0;
  double mean_log_trans = 0.0;  // field average of the path-measure mean of log trans_max
  double std_err = 0.0;
  double min_ess = 0.0;
  bool low_confidence = false;
};

struct FluctuationReport {
  std::vector<FluctuationPoint> points;
  double slope = 0.0;
  double ci_lo = 0.0;  // 95% bootstrap interval over fields
  double ci_hi = 0.0;
  double slope_se = 0.0;
  bool low_confidence = false;
};

struct FluctuationPlan {
  std::vector<double> L_grid;
  double xi = 0.6;
  PathConfig path;  // L is overwritten per grid point
  std::size_t paths_per_field = 200;
  std::size_t fields = 8;
  bool free_motion = false;  // V = 0: empty fields
  double window_extra = -1.0;  // transversal widening; < 0 picks default_window_extra
  std::size_t bootstrap = 1000;
};

/// Transversal fluctuation scaling: for each L, the self-normalized mean of
/// log trans_max, averaged over fields; slope of that against log L with a
/// bootstrap interval from resampling fields. Path and field streams depend
/// only on (seed, L index, field index, path index), so a free-motion run with
/// the same seed is a paired baseline. Throws for fewer than 3 grid points.
FluctuationReport measure_fluctuation(const ModelParams& params, const FluctuationPlan& plan,
                                      std::uint64_t seed, int threads = 0);

struct SlabOccupation {
  Estimate occupation;     // path-measure mean of the time spent in the slab
  Estimate short_fraction; // path-measure probability of occupation <= L^(xi - eps)
  double threshold = 0.0;
};

/// Occupation of the slab [a, a + L^xi] x [-L^xi/2, L^xi/2]^(d-1) under the
/// path measure, restricted to the tube event when `tube_restricted`.
/// Throws unless 0 <= a <= L - L^xi.
SlabOccupation slab_occupation_stats(const TrapField& field, const PathConfig& config,
                                     double a, std::size_t n, std::uint64_t seed,
                                     bool tube_restricted = true, double eps = 0.05,
                                     int threads = 0);

struct RotationReport {
  std::size_t fields = 0;
  int N = 1;
  double theta = 0.0;
  std::size_t center_max = 0;   // fields where i = 0 attains the maximum
  std::size_t degenerate = 0;   // fields whose maximum was a tie
  double frequency = 0.0;
  double expected = 0.0;        // 1 / (2N + 1)
  double sigma = 0.0;           // binomial standard deviation of the frequency
  bool within_3sigma = false;
  std::vector<int> argmax;      // per field
};

struct RotationPlan {
  double L = 32.0;
  double xi = 0.75;
  int N = 1;
  std::optional<double> theta;  // defaults to 10 sqrt(d) L^(xi - 1)
  std::size_t fields = 200;
  std::size_t paths_per_field = 100;
  PathConfig path;  // L, xi and stop_on_tube_exit are overwritten
};

/// 10 sqrt(d) L^(xi - 1)
double rotation_angle(int d, double L, double xi);

/// For each field, Z(A) in the fields R_{i theta} omega, i = -N..N, from one
/// set of paths; reports how often i = 0 is the maximum. Ties go to the
/// smallest |i| (then to negative i) and are counted as degenerate. Fields are
/// drawn on a box large enough that every rotated copy covers the path window.
RotationReport rotation_exchange_test(const ModelParams& params, const RotationPlan& plan,
                                      std::uint64_t seed, int threads = 0);

}  // namespace trapwalk
