#pragma once

// Batch command-line front end. Every subcommand writes its artifacts and a
// manifest.json into --out; failures map to exit codes 1 (parse or
// validation), 2 (I/O) and 3 (numerical, with diagnostic.json).

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tenkit::cli {

inline constexpr const char* kVersion = "1.0.0";

/// Runs the acceptance suite; fills `report` and returns true if every criterion passed.
using SelftestFn = std::function<bool(std::ostream& log, nlohmann::json& report)>;

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const SelftestFn& selftest = {});

int run(int argc, char** argv, const SelftestFn& selftest = {});

}  // namespace tenkit::cli
