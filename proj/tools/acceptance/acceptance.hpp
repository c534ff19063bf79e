#pragma once

// The ten acceptance criteria, shared by the `acceptance` binary and
// `tenkit selftest`.

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tenkit::acceptance {

struct Outcome {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runs the selected criteria (all when empty), printing one line each.
std::vector<Outcome> run_all(std::ostream& log, const std::vector<int>& only = {});

/// run_all plus a JSON summary; true if every criterion passed.
bool run_selftest(std::ostream& log, nlohmann::json& report);

}  // namespace tenkit::acceptance
