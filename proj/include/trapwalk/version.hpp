#pragma once

#include <string_view>
#include <utility>

namespace trapwalk {

inline constexpr std::string_view kVersion = "0.1.0";

/// Per-module revision numbers, bumped whenever a module's numerical output
/// for a fixed seed changes. Written to every run manifest.
inline constexpr std::pair<std::string_view, int> kModuleVersions[] = {
    {"env", 1}, {"kernel", 1}, {"sampler", 1}, {"tilt", 1}, {"theory", 1}, {"cli", 1},
};

}  // namespace trapwalk
