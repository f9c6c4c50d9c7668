#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trapwalk/env.hpp"
#include "trapwalk/sampler.hpp"
#include "trapwalk/tilt.hpp"

namespace trapwalk::cli {

/// Bad configuration: the tool exits with status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Mode { PointToPlane, PointToPoint };

struct ExperimentConfig {
  ModelParams model{2, 3.0, 1.0, 0.5, 64.0};
  Mode mode = Mode::PointToPlane;
  std::vector<double> L_grid;
  double xi = 0.6;
  double dt = 1e-2;
  std::optional<double> drift;
  std::int64_t max_steps = 0;
  std::size_t replicas = 1000;
  std::size_t fields_per_point = 1;
  std::uint64_t master_seed = 1;
  std::string output_path = ".";

  std::vector<std::string> events{"all", "A", "B"};
  std::optional<double> theta;
  int N = 1;
  bool free_motion = false;
  double window_extra = -1.0;
  std::size_t bootstrap = 1000;
  std::size_t rn_fields = 1000;
  std::vector<double> s_grid{0.0, 1.0, 2.0, 5.0, 10.0};
  std::vector<double> s_fit{10.0, 100.0};
  std::size_t mc_fields = 10000;
  int kernel_dims = 1;
  double kernel_width = 1.0;
  std::size_t kernel_queries = 1000;
  double kernel_t_min = 1e-3;
  double kernel_t_max = 10.0;
  double lower_threshold = 2.0;

  /// The path settings for one L of the grid.
  PathConfig path(double L) const;
  TiltMode tilt_mode() const {
    return mode == Mode::PointToPlane ? TiltMode::PointToPlane : TiltMode::PointToPoint;
  }
  /// Every key with its resolved value, sorted by key, as written to manifests.
  std::map<std::string, std::string> echo() const;
};

/// Names of all accepted keys.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; '#' starts a comment. Unknown or repeated
/// keys and malformed values throw ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Throws ConfigError unless L_grid is nonempty, positive and increasing.
void require_L_grid(const ExperimentConfig& config);

}  // namespace trapwalk::cli
