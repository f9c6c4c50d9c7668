#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace trapwalk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitConfig = 2;

struct Invocation {
  std::string command;
  ExperimentConfig config;
  std::filesystem::path out;
  int threads = 0;
  bool seed_given = false;  // --seed was passed
};

/// Runs one subcommand, writing `<command>.csv` (plus extras) and
/// `<command>.manifest` into inv.out. Returns the exit status; configuration
/// problems throw ConfigError or std::invalid_argument.
int run_command(const Invocation& inv, std::ostream& log);

/// Parses argv and dispatches; maps every error to its exit status.
int main_entry(const std::vector<std::string>& args, std::ostream& log, std::ostream& err);

}  // namespace trapwalk::cli
