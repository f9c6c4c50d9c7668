#include "config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace trapwalk::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || std::isnan(x)) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a number");
  }
  return x;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError("key '" + key + "': '" + v + "' is not an integer");
  }
  return x;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const std::int64_t x = to_int(key, v);
  if (x < 0) throw ConfigError("key '" + key + "' must be >= 0");
  return static_cast<std::size_t>(x);
}

std::uint64_t to_seed(const std::string& key, const std::string& v) {
  if (v.empty() || v[0] == '-') throw ConfigError("key '" + key + "' must be a nonnegative integer");
  errno = 0;
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || errno == ERANGE) {
    throw ConfigError("key '" + key + "': '" + v + "' is not a 64-bit seed");
  }
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "' must be true or false");
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string join(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + num(xs[i]);
  return s;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "d", "alpha", "gamma", "lambda", "r_max", "mode", "L_grid", "xi", "dt", "drift", "max_steps",
      "replicas", "fields_per_point", "seed", "output", "events", "theta", "N", "free_motion",
      "window_extra", "bootstrap", "rn_fields", "s_grid", "s_fit", "mc_fields", "kernel_dims",
      "kernel_width", "kernel_queries", "kernel_t_min", "kernel_t_max", "lower_threshold"};
  return keys;
}

PathConfig ExperimentConfig::path(double L) const {
  PathConfig pc;
  pc.L = L;
  pc.xi = xi;
  pc.dt = dt;
  pc.drift = drift;
  pc.max_steps = max_steps;
  pc.target = mode == Mode::PointToPlane ? Target::Hyperplane : Target::Ball;
  return pc;
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
  std::map<std::string, std::string> m;
  m["d"] = std::to_string(model.d);
  m["alpha"] = num(model.alpha);
  m["gamma"] = num(model.gamma);
  m["lambda"] = num(model.lambda);
  m["r_max"] = num(model.r_max);
  m["mode"] = mode == Mode::PointToPlane ? "point_to_plane" : "point_to_point";
  m["L_grid"] = join(L_grid);
  m["xi"] = num(xi);
  m["dt"] = num(dt);
  m["drift"] = drift ? num(*drift) : "default";
  m["max_steps"] = std::to_string(max_steps);
  m["replicas"] = std::to_string(replicas);
  m["fields_per_point"] = std::to_string(fields_per_point);
  m["seed"] = std::to_string(master_seed);
  m["output"] = output_path;
  std::string ev;
  for (std::size_t i = 0; i < events.size(); ++i) ev += (i ? "," : "") + events[i];
  m["events"] = ev;
  m["theta"] = theta ? num(*theta) : "default";
  m["N"] = std::to_string(N);
  m["free_motion"] = free_motion ? "true" : "false";
  m["window_extra"] = num(window_extra);
  m["bootstrap"] = std::to_string(bootstrap);
  m["rn_fields"] = std::to_string(rn_fields);
  m["s_grid"] = join(s_grid);
  m["s_fit"] = join(s_fit);
  m["mc_fields"] = std::to_string(mc_fields);
  m["kernel_dims"] = std::to_string(kernel_dims);
  m["kernel_width"] = num(kernel_width);
  m["kernel_queries"] = std::to_string(kernel_queries);
  m["kernel_t_min"] = num(kernel_t_min);
  m["kernel_t_max"] = num(kernel_t_max);
  m["lower_threshold"] = num(lower_threshold);
  return m;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  int d = c.model.d;
  double alpha = c.model.alpha, gamma = c.model.gamma, lambda = c.model.lambda, r_max = c.model.r_max;
  std::set<std::string> seen;
  const auto& keys = config_keys();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' given twice");
    }
    if (key == "d") {
      const auto x = to_int(key, v);
      if (x < 1 || x > 16) throw ConfigError("d must lie in [1, 16]");
      d = static_cast<int>(x);
    } else if (key == "alpha") {
      alpha = to_double(key, v);
    } else if (key == "gamma") {
      gamma = to_double(key, v);
    } else if (key == "lambda") {
      lambda = to_double(key, v);
    } else if (key == "r_max") {
      r_max = v == "inf" ? INFINITY : to_double(key, v);
    } else if (key == "mode") {
      if (v == "point_to_plane") {
        c.mode = Mode::PointToPlane;
      } else if (v == "point_to_point") {
        c.mode = Mode::PointToPoint;
      } else {
        throw ConfigError("mode must be point_to_plane or point_to_point");
      }
    } else if (key == "L_grid") {
      c.L_grid = to_list(key, v);
      require_L_grid(c);
    } else if (key == "xi") {
      c.xi = to_double(key, v);
    } else if (key == "dt") {
      c.dt = to_double(key, v);
    } else if (key == "drift") {
      if (v != "default") c.drift = to_double(key, v);
    } else if (key == "max_steps") {
      c.max_steps = to_int(key, v);
    } else if (key == "replicas") {
      c.replicas = to_count(key, v);
    } else if (key == "fields_per_point") {
      c.fields_per_point = to_count(key, v);
    } else if (key == "seed") {
      c.master_seed = to_seed(key, v);
    } else if (key == "output") {
      c.output_path = v;
    } else if (key == "events") {
      c.events = split_list(v);
      for (const auto& e : c.events) {
        if (e != "all" && e != "A" && e != "B" && e != "A_theta") {
          throw ConfigError("events entries must be all, A, B or A_theta");
        }
      }
    } else if (key == "theta") {
      c.theta = to_double(key, v);
    } else if (key == "N") {
      c.N = static_cast<int>(to_int(key, v));
    } else if (key == "free_motion") {
      c.free_motion = to_bool(key, v);
    } else if (key == "window_extra") {
      c.window_extra = to_double(key, v);
    } else if (key == "bootstrap") {
      c.bootstrap = to_count(key, v);
    } else if (key == "rn_fields") {
      c.rn_fields = to_count(key, v);
    } else if (key == "s_grid") {
      c.s_grid = to_list(key, v);
    } else if (key == "s_fit") {
      c.s_fit = to_list(key, v);
    } else if (key == "mc_fields") {
      c.mc_fields = to_count(key, v);
    } else if (key == "kernel_dims") {
      c.kernel_dims = static_cast<int>(to_int(key, v));
    } else if (key == "kernel_width") {
      c.kernel_width = to_double(key, v);
    } else if (key == "kernel_queries") {
      c.kernel_queries = to_count(key, v);
    } else if (key == "kernel_t_min") {
      c.kernel_t_min = to_double(key, v);
    } else if (key == "kernel_t_max") {
      c.kernel_t_max = to_double(key, v);
    } else if (key == "lower_threshold") {
      c.lower_threshold = to_double(key, v);
    }
  }
  try {
    c.model = ModelParams(d, alpha, gamma, lambda, r_max);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(c.xi > 0.0 && c.xi < 1.0)) throw ConfigError("xi must lie in (0, 1)");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) throw ConfigError("dt must be finite and > 0");
  if (c.drift && !(*c.drift >= 0.0 && std::isfinite(*c.drift))) throw ConfigError("drift must be >= 0");
  if (c.max_steps < 0) throw ConfigError("max_steps must be >= 0");
  if (c.replicas < 1 || c.fields_per_point < 1) throw ConfigError("replicas and fields_per_point must be >= 1");
  if (c.N < 1) throw ConfigError("N must be >= 1");
  if (c.events.empty()) throw ConfigError("events must not be empty");
  if (c.s_fit.size() != 2 || !(c.s_fit[0] > 0.0 && c.s_fit[1] > c.s_fit[0])) {
    throw ConfigError("s_fit must be two increasing positive distances");
  }
  for (double s : c.s_grid) {
    if (!(s >= 0.0)) throw ConfigError("s_grid entries must be >= 0");
  }
  if (c.kernel_dims < 1 || !(c.kernel_width > 0.0) || !(c.kernel_t_min > 0.0) ||
      !(c.kernel_t_max >= c.kernel_t_min)) {
    throw ConfigError("kernel settings need dims >= 1, width > 0 and 0 < t_min <= t_max");
  }
  return c;
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void require_L_grid(const ExperimentConfig& config) {
  if (config.L_grid.empty()) throw ConfigError("L_grid must not be empty");
  for (std::size_t i = 0; i < config.L_grid.size(); ++i) {
    if (!(config.L_grid[i] > 0.0) || !std::isfinite(config.L_grid[i])) {
      throw ConfigError("L_grid entries must be finite and > 0");
    }
    if (i > 0 && !(config.L_grid[i] > config.L_grid[i - 1])) throw ConfigError("L_grid must increase");
  }
}

}  // namespace trapwalk::cli
