#include "trapwalk/env.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "trapwalk/quadrature.hpp"
#include "trapwalk/rng.hpp"

namespace trapwalk {

namespace {

constexpr std::int64_t kMaxCellsPerLayer = std::int64_t{1} << 22;

// Tolerance for "ball meets window" on fields produced by rotation or parsing,
// where the geometric test may be off by a rounding error.
bool meets_window(const Window& w, std::span<const double> c, double r) {
  return w.distance(c) <= r * (1.0 + 1e-12) + 1e-12;
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

double unit_ball_volume(int d) {
  require(d >= 0, "dimension must be nonnegative");
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

ModelParams::ModelParams(int d_, double alpha_, double gamma_, double lambda_, double r_max_)
    : d(d_), alpha(alpha_), gamma(gamma_), lambda(lambda_), r_max(r_max_) {
  validate();
}

void ModelParams::validate() const {
  require(d >= 1 && d <= 16, "d must be in [1, 16]");
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be finite and > 0");
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be finite and > 0");
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be finite and > 0");
  require(r_max >= 1.0, "r_max must be >= 1");
  require(alpha + gamma - d > 0.0, "alpha + gamma - d must be > 0 for a finite potential");
}

// ---------------------------------------------------------------------------
// Window

Window::Window(Point lower, Point upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  require(!lower_.empty(), "window needs at least one dimension");
  require(lower_.size() == upper_.size(), "window corners differ in dimension");
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    require(std::isfinite(lower_[j]) && std::isfinite(upper_[j]), "window corners must be finite");
    require(lower_[j] <= upper_[j], "window lower corner exceeds upper corner");
  }
}

Window Window::cube(int d, double lo, double hi) {
  return Window(Point(static_cast<std::size_t>(d), lo), Point(static_cast<std::size_t>(d), hi));
}

double Window::volume() const {
  double v = 1.0;
  for (std::size_t j = 0; j < lower_.size(); ++j) v *= upper_[j] - lower_[j];
  return v;
}

bool Window::degenerate() const {
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    if (!(upper_[j] > lower_[j])) return true;
  }
  return false;
}

bool Window::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    if (x[j] < lower_[j] || x[j] > upper_[j]) return false;
  }
  return true;
}

bool Window::contains(const Window& other) const {
  if (other.dims() != dims()) return false;
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    if (other.lower_[j] < lower_[j] || other.upper_[j] > upper_[j]) return false;
  }
  return true;
}

double Window::distance(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    const double e = std::max({lower_[j] - x[j], 0.0, x[j] - upper_[j]});
    s += e * e;
  }
  return std::sqrt(s);
}

Window Window::dilated(double margin) const {
  Point lo = lower_;
  Point hi = upper_;
  for (std::size_t j = 0; j < lo.size(); ++j) {
    lo[j] -= margin;
    hi[j] += margin;
  }
  return Window(std::move(lo), std::move(hi));
}

// ---------------------------------------------------------------------------
// TrapField

TrapField TrapField::from_traps(const ModelParams& params, const Window& window,
                                std::vector<Trap> traps, std::uint64_t seed) {
  params.validate();
  require(window.dims() == params.d, "window dimension does not match d");
  const auto d = static_cast<std::size_t>(params.d);
  for (const auto& t : traps) {
    require(t.center.size() == d, "trap center has wrong dimension");
    require(t.radius >= 1.0 && std::isfinite(t.radius), "trap radius must be finite and >= 1");
    for (double c : t.center) require(std::isfinite(c), "trap center must be finite");
    require(meets_window(window, t.center, t.radius), "trap ball does not meet the window");
  }

  std::sort(traps.begin(), traps.end(), [](const Trap& a, const Trap& b) {
    if (a.center != b.center) return a.center < b.center;
    return a.radius < b.radius;
  });

  TrapField f;
  f.params_ = params;
  f.window_ = window;
  f.seed_ = seed;
  f.centers_.reserve(traps.size() * d);
  f.radii_.reserve(traps.size());
  f.strengths_.reserve(traps.size());
  for (const auto& t : traps) {
    f.centers_.insert(f.centers_.end(), t.center.begin(), t.center.end());
    f.radii_.push_back(t.radius);
    f.strengths_.push_back(std::pow(t.radius, -params.gamma));
  }
  f.build_index();
  return f;
}

TrapField TrapField::empty(const ModelParams& params, const Window& window) {
  return from_traps(params, window, {});
}

Trap TrapField::trap(std::size_t i) const {
  const auto c = center(i);
  return Trap{Point(c.begin(), c.end()), radii_[i]};
}

std::vector<Trap> TrapField::traps() const {
  std::vector<Trap> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push_back(trap(i));
  return out;
}

void TrapField::build_index() {
  layers_.clear();
  if (radii_.empty()) return;
  const auto d = static_cast<std::size_t>(params_.d);

  int max_class = 0;
  std::vector<int> cls(radii_.size());
  for (std::size_t i = 0; i < radii_.size(); ++i) {
    cls[i] = std::max(0, std::ilogb(radii_[i]));
    max_class = std::max(max_class, cls[i]);
  }

  for (int k = 0; k <= max_class; ++k) {
    std::vector<std::uint32_t> members;
    for (std::size_t i = 0; i < radii_.size(); ++i) {
      if (cls[i] == k) members.push_back(static_cast<std::uint32_t>(i));
    }
    if (members.empty()) continue;

    Layer layer;
    layer.origin.assign(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    double max_r = 0.0;
    for (auto id : members) {
      const auto c = center(id);
      for (std::size_t j = 0; j < d; ++j) {
        layer.origin[j] = std::min(layer.origin[j], c[j]);
        hi[j] = std::max(hi[j], c[j]);
      }
      max_r = std::max(max_r, radii_[id]);
    }
    // Cell side >= every radius in the layer, so a query only touches the 3^d
    // cells around its own.
    layer.cell = std::max(std::ldexp(1.0, k + 1), max_r);
    for (;;) {
      layer.extent.assign(d, 1);
      double cells = 1.0;
      for (std::size_t j = 0; j < d; ++j) {
        layer.extent[j] = static_cast<std::int64_t>(std::floor((hi[j] - layer.origin[j]) / layer.cell)) + 1;
        cells *= static_cast<double>(layer.extent[j]);
      }
      if (cells <= static_cast<double>(kMaxCellsPerLayer)) break;
      layer.cell *= std::max(1.01, std::pow(cells / static_cast<double>(kMaxCellsPerLayer), 1.0 / static_cast<double>(d)));
    }

    std::int64_t total = 1;
    for (auto e : layer.extent) total *= e;
    auto cell_of = [&](std::uint32_t id) {
      const auto c = center(id);
      std::int64_t flat = 0;
      for (std::size_t j = 0; j < d; ++j) {
        auto cj = static_cast<std::int64_t>(std::floor((c[j] - layer.origin[j]) / layer.cell));
        cj = std::clamp<std::int64_t>(cj, 0, layer.extent[j] - 1);
        flat = flat * layer.extent[j] + cj;
      }
      return flat;
    };
    layer.cell_start.assign(static_cast<std::size_t>(total) + 1, 0);
    for (auto id : members) ++layer.cell_start[static_cast<std::size_t>(cell_of(id)) + 1];
    std::partial_sum(layer.cell_start.begin(), layer.cell_start.end(), layer.cell_start.begin());
    layer.ids.resize(members.size());
    std::vector<std::uint32_t> fill(layer.cell_start.begin(), layer.cell_start.end() - 1);
    for (auto id : members) layer.ids[fill[static_cast<std::size_t>(cell_of(id))]++] = id;
    layers_.push_back(std::move(layer));
  }
}

template <class Visitor>
void TrapField::visit_covering(std::span<const double> x, Visitor&& visit) const {
  const auto d = static_cast<std::size_t>(params_.d);
  std::int64_t lo[16];
  std::int64_t hi[16];
  std::int64_t idx[16];
  for (const auto& layer : layers_) {
    bool outside = false;
    for (std::size_t j = 0; j < d; ++j) {
      const double u = (x[j] - layer.origin[j]) / layer.cell;
      if (!(u > -2.0) || !(u < static_cast<double>(layer.extent[j]) + 1.0)) {
        outside = true;
        break;
      }
      const auto c = static_cast<std::int64_t>(std::floor(u));
      lo[j] = std::max<std::int64_t>(c - 1, 0);
      hi[j] = std::min<std::int64_t>(c + 1, layer.extent[j] - 1);
      if (lo[j] > hi[j]) {
        outside = true;
        break;
      }
    }
    if (outside) continue;
    for (std::size_t j = 0; j < d; ++j) idx[j] = lo[j];
    bool more = true;
    while (more) {
      std::int64_t flat = 0;
      for (std::size_t j = 0; j < d; ++j) flat = flat * layer.extent[j] + idx[j];
      const auto begin = layer.cell_start[static_cast<std::size_t>(flat)];
      const auto end = layer.cell_start[static_cast<std::size_t>(flat) + 1];
      for (auto p = begin; p < end; ++p) {
        const auto id = layer.ids[p];
        const double* c = centers_.data() + static_cast<std::size_t>(id) * d;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double e = x[j] - c[j];
          s += e * e;
        }
        const double r = radii_[id];
        if (s <= r * r) visit(id);
      }
      more = false;
      for (std::size_t j = d; j-- > 0;) {
        if (++idx[j] <= hi[j]) {
          more = true;
          break;
        }
        idx[j] = lo[j];
      }
    }
  }
}

void TrapField::covering(std::span<const double> x, std::vector<std::uint32_t>& out) const {
  out.clear();
  if (x.size() != static_cast<std::size_t>(params_.d)) {
    throw std::invalid_argument("query point has wrong dimension");
  }
  visit_covering(x, [&](std::uint32_t id) { out.push_back(id); });
  std::sort(out.begin(), out.end());
}

double TrapField::potential(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(params_.d)) {
    throw std::invalid_argument("query point has wrong dimension");
  }
  if (layers_.empty()) return 0.0;
  thread_local std::vector<std::uint32_t> ids;
  ids.clear();
  visit_covering(x, [&](std::uint32_t id) { ids.push_back(id); });
  if (ids.size() > 1) std::sort(ids.begin(), ids.end());
  double v = 0.0;
  for (auto id : ids) v += strengths_[id];
  return v;
}

// ---------------------------------------------------------------------------
// Sampling

TrapField sample_field(const ModelParams& params, const Window& window, std::uint64_t seed) {
  params.validate();
  require(window.dims() == params.d, "window dimension does not match d");
  const auto d = static_cast<std::size_t>(params.d);

  TrapField f;
  f.params_ = params;
  f.window_ = window;
  f.seed_ = seed;
  if (window.degenerate()) return f;

  struct Plan {
    double a, b, mass;
    Window box;
    double mean;
  };
  std::vector<Plan> plan;
  double total = 0.0;
  for (int k = 0;; ++k) {
    const double a = std::ldexp(1.0, k);
    if (!(a < params.r_max)) break;
    const double b = std::min(std::ldexp(1.0, k + 1), params.r_max);
    const double mass = std::pow(a, -params.alpha) - std::pow(b, -params.alpha);
    Window box = window.dilated(b);
    const double mean = box.volume() * mass;
    total += mean;
    if (!std::isfinite(total) || total > kMaxExpectedCandidates) {
      throw std::overflow_error("window too large: expected candidate count " +
                                std::to_string(total) + " exceeds budget");
    }
    plan.push_back({a, b, mass, std::move(box), mean});
  }

  std::vector<Trap> traps;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    const auto& p = plan[k];
    Rng rng = split_seed(seed, static_cast<std::int64_t>(k));
    const std::uint64_t n = rng.poisson(p.mean);
    RadiusClass rc{p.a, p.b, p.mean, n, 0};
    const double a_pow = std::pow(p.a, -params.alpha);
    Point c(d);
    for (std::uint64_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        c[j] = p.box.lower()[j] + rng.uniform() * (p.box.upper()[j] - p.box.lower()[j]);
      }
      double r = std::pow(a_pow - rng.uniform() * p.mass, -1.0 / params.alpha);
      r = std::clamp(r, p.a, p.b);
      if (window.distance(c) <= r) {
        traps.push_back(Trap{c, r});
        ++rc.kept;
      }
    }
    f.classes_.push_back(rc);
  }

  auto classes = std::move(f.classes_);
  f = TrapField::from_traps(params, window, std::move(traps), seed);
  f.classes_ = std::move(classes);
  return f;
}

double truncation_bias(const ModelParams& params) {
  params.validate();
  const double excess = params.alpha + params.gamma - params.d;
  return params.alpha * unit_ball_volume(params.d) *
         std::pow(params.r_max, -excess) / excess;
}

double mean_potential(const ModelParams& params) {
  params.validate();
  const double excess = params.alpha + params.gamma - params.d;
  return params.alpha * unit_ball_volume(params.d) *
         (1.0 - std::pow(params.r_max, -excess)) / excess;
}

void rotate_point(std::span<double> x, double theta) {
  if (x.size() < 2) throw std::invalid_argument("rotation needs d >= 2");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double x1 = x[0];
  const double x2 = x[1];
  x[0] = x1 * c - x2 * s;
  x[1] = x2 * c + x1 * s;
}

TrapField rotate_field(const TrapField& field, double theta) {
  if (field.dims() < 2) throw std::invalid_argument("rotate_field needs d >= 2");
  const auto& w = field.window();
  Point lo = w.lower();
  Point hi = w.upper();
  lo[0] = lo[1] = std::numeric_limits<double>::infinity();
  hi[0] = hi[1] = -std::numeric_limits<double>::infinity();
  for (int corner = 0; corner < 4; ++corner) {
    double p[2] = {(corner & 1) ? w.upper()[0] : w.lower()[0],
                   (corner & 2) ? w.upper()[1] : w.lower()[1]};
    rotate_point(p, theta);
    for (int j = 0; j < 2; ++j) {
      lo[static_cast<std::size_t>(j)] = std::min(lo[static_cast<std::size_t>(j)], p[j]);
      hi[static_cast<std::size_t>(j)] = std::max(hi[static_cast<std::size_t>(j)], p[j]);
    }
  }
  std::vector<Trap> traps = field.traps();
  for (auto& t : traps) rotate_point(t.center, theta);
  auto classes = field.radius_classes();
  TrapField out = TrapField::from_traps(field.params(), Window(lo, hi), std::move(traps), field.seed());
  out.classes_ = std::move(classes);
  return out;
}

bool covered_after_rotation(const Window& original, const Window& region, double theta) {
  if (original.dims() != region.dims() || original.dims() < 2) {
    throw std::invalid_argument("covered_after_rotation needs matching d >= 2");
  }
  for (std::size_t j = 2; j < static_cast<std::size_t>(original.dims()); ++j) {
    if (region.lower()[j] < original.lower()[j] || region.upper()[j] > original.upper()[j]) return false;
  }
  // Both sets are convex, so checking the region's corners pulled back by -theta suffices.
  for (int corner = 0; corner < 4; ++corner) {
    double p[2] = {(corner & 1) ? region.upper()[0] : region.lower()[0],
                   (corner & 2) ? region.upper()[1] : region.lower()[1]};
    rotate_point(p, -theta);
    for (std::size_t j = 0; j < 2; ++j) {
      if (p[j] < original.lower()[j] || p[j] > original.upper()[j]) return false;
    }
  }
  return true;
}

double max_potential_scan(const TrapField& field, const Window& box, double resolution,
                          std::size_t max_points) {
  require(resolution > 0.0 && std::isfinite(resolution), "resolution must be > 0");
  require(box.dims() == field.dims(), "scan box dimension does not match the field");
  const auto d = static_cast<std::size_t>(field.dims());
  std::vector<std::int64_t> n(d);
  double total = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double side = box.upper()[j] - box.lower()[j];
    n[j] = static_cast<std::int64_t>(std::ceil(side / resolution - 1e-9)) + 1;
    if (side == 0.0) n[j] = 1;
    total *= static_cast<double>(n[j]);
  }
  if (total > static_cast<double>(max_points)) {
    throw std::length_error("scan grid of " + std::to_string(total) + " points exceeds budget");
  }
  if (field.empty()) return 0.0;
  std::vector<std::int64_t> idx(d, 0);
  Point x(d);
  double best = 0.0;
  for (;;) {
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = std::min(box.lower()[j] + static_cast<double>(idx[j]) * resolution, box.upper()[j]);
    }
    best = std::max(best, field.potential(x));
    std::size_t j = d;
    bool done = true;
    while (j > 0) {
      --j;
      if (++idx[j] < n[j]) {
        done = false;
        break;
      }
      idx[j] = 0;
    }
    if (done) break;
  }
  return best;
}

double campbell_exp_moment(const ModelParams& params, double a, double upper) {
  params.validate();
  const double sigma = unit_ball_volume(params.d);
  const double reach = std::sqrt(static_cast<double>(params.d));
  auto integrand = [&](double r) {
    return params.alpha * std::pow(r, -params.alpha - 1.0) * sigma *
           std::pow(r + reach, params.d) * std::expm1(a * std::pow(r, -params.gamma));
  };
  return std::exp(integrate(integrand, 1.0, upper, 1e-11));
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

double parse_real(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error(std::string("trapfield: missing ") + what);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("trapfield: bad number for ") + what + ": " + tok);
  }
  if (used != tok.size() || !std::isfinite(v)) {
    throw std::runtime_error(std::string("trapfield: bad number for ") + what + ": " + tok);
  }
  return v;
}

}  // namespace

void save_field(const TrapField& field, std::ostream& out) {
  const auto& p = field.params();
  out << "trapfield 1 " << p.d << ' ' << format_real(p.alpha) << ' ' << format_real(p.gamma)
      << ' ' << format_real(p.lambda) << ' ' << format_real(p.r_max) << ' ' << field.seed();
  for (double v : field.window().lower()) out << ' ' << format_real(v);
  for (double v : field.window().upper()) out << ' ' << format_real(v);
  out << '\n';
  for (std::size_t i = 0; i < field.size(); ++i) {
    for (double c : field.center(i)) out << format_real(c) << ' ';
    out << format_real(field.radius(i)) << '\n';
  }
}

TrapField load_field(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trapfield: empty input");
  std::istringstream header(line);
  std::string magic;
  int version = 0;
  int d = 0;
  header >> magic >> version >> d;
  if (magic != "trapfield" || version != 1) throw std::runtime_error("trapfield: bad header");
  if (d < 1 || d > 16) throw std::runtime_error("trapfield: bad dimension");
  const double alpha = parse_real(header, "alpha");
  const double gamma = parse_real(header, "gamma");
  const double lambda = parse_real(header, "lambda");
  const double r_max = parse_real(header, "r_max");
  std::uint64_t seed = 0;
  if (!(header >> seed)) throw std::runtime_error("trapfield: bad seed");
  Point lo(static_cast<std::size_t>(d));
  Point hi(static_cast<std::size_t>(d));
  for (auto& v : lo) v = parse_real(header, "window lower corner");
  for (auto& v : hi) v = parse_real(header, "window upper corner");
  std::string extra;
  if (header >> extra) throw std::runtime_error("trapfield: trailing header tokens");

  try {
    ModelParams params(d, alpha, gamma, lambda, r_max);
    Window window(lo, hi);
    std::vector<Trap> traps;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream rec(line);
      Trap t;
      t.center.resize(static_cast<std::size_t>(d));
      for (auto& c : t.center) c = parse_real(rec, "trap center");
      t.radius = parse_real(rec, "trap radius");
      if (rec >> extra) throw std::runtime_error("trapfield: trailing trap tokens");
      if (t.radius > r_max * (1.0 + 1e-12)) throw std::runtime_error("trapfield: radius exceeds r_max");
      traps.push_back(std::move(t));
    }
    return TrapField::from_traps(params, window, std::move(traps), seed);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("trapfield: ") + e.what());
  }
}

}  // namespace trapwalk
