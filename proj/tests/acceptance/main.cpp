#include <cstdio>
#include <cstdlib>
#include <string>

#include "criteria.hpp"

// Usage: acceptance [criterion ids...]
int main(int argc, char** argv) {
  trapwalk::acceptance::Options options;
  for (int i = 1; i < argc; ++i) options.only.push_back(std::atoi(argv[i]));
  const auto results = trapwalk::acceptance::run(options, [](const auto& r) {
    std::printf("%s\n", trapwalk::acceptance::format(r).c_str());
    std::fflush(stdout);
  });
  return trapwalk::acceptance::all_gates_pass(results) ? 0 : 1;
}
