#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

namespace trapwalk {

using Point = std::vector<double>;

/// Volume of the unit ball in `d` dimensions.
double unit_ball_volume(int d);

/// Model constants: dimension, radius-tail exponent alpha (nu([r,inf)) = r^-alpha
/// on r >= 1), trap-strength exponent gamma (a trap of radius r adds r^-gamma),
/// homogeneous killing rate lambda and the simulation radius cutoff r_max.
struct ModelParams {
  int d = 2;
  double alpha = 2.0;
  double gamma = 1.0;
  double lambda = 0.5;
  double r_max = 64.0;

  ModelParams() = default;
  /// Throws std::invalid_argument unless d >= 1, alpha, gamma, lambda > 0,
  /// r_max >= 1 and alpha + gamma - d > 0.
  ModelParams(int d, double alpha, double gamma, double lambda, double r_max);

  void validate() const;
};

struct Trap {
  Point center;
  double radius = 1.0;
};

/// Axis-aligned box. Degenerate (zero-width) sides are allowed; inverted ones
/// are not.
class Window {
 public:
  Window() = default;
  Window(Point lower, Point upper);

  /// [lo, hi]^d
  static Window cube(int d, double lo, double hi);

  int dims() const { return static_cast<int>(lower_.size()); }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }
  double volume() const;
  bool degenerate() const;
  bool contains(std::span<const double> x) const;
  bool contains(const Window& other) const;
  /// Euclidean distance from x to the box (0 inside).
  double distance(std::span<const double> x) const;
  /// Box grown by `margin` on every side.
  Window dilated(double margin) const;

  friend bool operator==(const Window&, const Window&) = default;

 private:
  Point lower_;
  Point upper_;
};

/// Bookkeeping for one dyadic radius class [lo, hi) of a sampled field.
struct RadiusClass {
  double lo = 1.0;
  double hi = 2.0;
  double candidate_mean = 0.0;   // Poisson mean of candidates in the dilated window
  std::uint64_t candidates = 0;  // candidates drawn
  std::uint64_t kept = 0;        // candidates whose ball meets the window
};

/// Immutable realization of the trap process restricted to a window, with a
/// radius-stratified grid index. Traps are stored in a canonical order
/// (lexicographic in center, then radius) and potentials are always summed in
/// that order, so values are reproducible bit for bit.
class TrapField {
 public:
  /// Throws std::invalid_argument if a trap has radius < 1 or misses the window.
  static TrapField from_traps(const ModelParams& params, const Window& window,
                              std::vector<Trap> traps, std::uint64_t seed = 0);
  static TrapField empty(const ModelParams& params, const Window& window);

  const ModelParams& params() const { return params_; }
  const Window& window() const { return window_; }
  std::uint64_t seed() const { return seed_; }
  int dims() const { return params_.d; }
  std::size_t size() const { return radii_.size(); }
  bool empty() const { return radii_.empty(); }

  Trap trap(std::size_t i) const;
  std::vector<Trap> traps() const;
  std::span<const double> center(std::size_t i) const {
    return {centers_.data() + i * static_cast<std::size_t>(params_.d),
            static_cast<std::size_t>(params_.d)};
  }
  double radius(std::size_t i) const { return radii_[i]; }
  /// r_i^-gamma
  double strength(std::size_t i) const { return strengths_[i]; }

  /// Sum of r_i^-gamma over traps whose closed ball contains x. Points outside
  /// the window only see the traps that were sampled.
  double potential(std::span<const double> x) const;

  /// Ids (ascending) of the traps covering x, written into `out`.
  void covering(std::span<const double> x, std::vector<std::uint32_t>& out) const;

  const std::vector<RadiusClass>& radius_classes() const { return classes_; }

 private:
  struct Layer {
    double cell = 1.0;
    std::vector<double> origin;
    std::vector<std::int64_t> extent;      // cells per dimension
    std::vector<std::uint32_t> cell_start;  // CSR offsets, size = cells + 1
    std::vector<std::uint32_t> ids;
  };

  TrapField() = default;
  void build_index();
  template <class Visitor>
  void visit_covering(std::span<const double> x, Visitor&& visit) const;

  ModelParams params_;
  Window window_;
  std::uint64_t seed_ = 0;
  std::vector<double> centers_;
  std::vector<double> radii_;
  std::vector<double> strengths_;
  std::vector<Layer> layers_;
  std::vector<RadiusClass> classes_;

  friend TrapField sample_field(const ModelParams&, const Window&, std::uint64_t);
  friend TrapField rotate_field(const TrapField&, double);
};

/// Upper bound on the expected number of candidate traps a single sample_field
/// call may draw.
inline constexpr double kMaxExpectedCandidates = 5e7;

/// Draws the trap process in `window`: for each dyadic class [a, b) of [1, r_max]
/// a Poisson(|window dilated by b| * nu([a,b))) number of candidates, uniform
/// centers on the dilated window, radii from nu restricted to [a, b) by
/// inversion; candidates are kept iff their ball meets the window. Degenerate
/// windows give an empty field. Throws std::overflow_error when the expected
/// candidate count is not finite or exceeds kMaxExpectedCandidates.
TrapField sample_field(const ModelParams& params, const Window& window, std::uint64_t seed);

/// Expected contribution to V at any point of the traps with radius > r_max:
/// alpha * sigma_d * r_max^(d - alpha - gamma) / (alpha + gamma - d).
double truncation_bias(const ModelParams& params);

/// E[V(x)] for the truncated process (radii in [1, r_max]).
double mean_potential(const ModelParams& params);

/// Rotation of the (x1, x2) plane by theta. Throws for d < 2.
void rotate_point(std::span<double> x, double theta);

/// Field with every center rotated by theta in the first two coordinates;
/// the window becomes the bounding box of the rotated window. That box
/// overstates the sampled region; check coverage with
/// covered_after_rotation instead.
TrapField rotate_field(const TrapField& field, double theta);

/// True if `region` lies inside the rotation by theta of `original`, i.e.
/// a field sampled on `original` and rotated by theta is complete there.
bool covered_after_rotation(const Window& original, const Window& region, double theta);

inline constexpr std::size_t kDefaultScanBudget = std::size_t{1} << 24;

/// Maximum of the potential over the regular grid of spacing `resolution`
/// covering `box` (both ends included). This is a lower bound on the supremum.
/// Throws std::length_error if the grid would exceed `max_points`.
double max_potential_scan(const TrapField& field, const Window& box, double resolution,
                          std::size_t max_points = kDefaultScanBudget);

/// E[exp(a X)] for X = sum r_i^-gamma 1{|w_i| <= r_i + sqrt(d)} (the potential
/// bound over a unit cube), from Campbell's formula:
///   exp( int_1^upper alpha r^(-alpha-1) sigma_d (r + sqrt d)^d (e^(a r^-gamma) - 1) dr ).
/// Throws QuadratureError if the integral does not converge.
double campbell_exp_moment(const ModelParams& params, double a,
                           double upper = std::numeric_limits<double>::infinity());

/// Headered text format: one header line
///   trapfield 1 <d> <alpha> <gamma> <lambda> <r_max> <seed> <lower...> <upper...>
/// then one line per trap, `<center...> <radius>`, all reals in %.17e.
void save_field(const TrapField& field, std::ostream& out);
/// Parses and validates the format written by save_field. Throws
/// std::runtime_error on malformed input or violated invariants.
TrapField load_field(std::istream& in);

}  // namespace trapwalk
