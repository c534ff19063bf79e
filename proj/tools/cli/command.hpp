#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tenkit/io.hpp"
#include "tenkit/tensor.hpp"

namespace tenkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
  std::string out;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// State handed to a subcommand's action.
struct Context {
  Common common;
  fs::path out;
  json diagnostics = json::object();
  /// Anything wall-clock dependent; kept out of the comparable parts of the manifest.
  json timing = json::object();
};

using Action = std::function<void(Context&)>;

/// Registered by each subcommand; `chosen` is set by the parse callback.
struct Registry {
  Common common;
  Action chosen;
  CLI::App* chosen_app = nullptr;
  std::string chosen_name;
};

void add_common(CLI::App* sub, Registry& reg, bool out_required = true);
/// Marks `sub` as the command to run once parsing finishes.
void bind(CLI::App* sub, Registry& reg, std::string name, Action action);

void register_decompose(CLI::App& app, Registry& reg);
void register_complete(CLI::App& app, Registry& reg);
void register_uq(CLI::App& app, Registry& reg);
void register_mor(CLI::App& app, Registry& reg);
void register_volterra(CLI::App& app, Registry& reg);

/// CSV helpers.
std::vector<std::string> numbered(const std::string& stem, Index count);
json to_json(const Vector& v);
json to_json(const MultiIndex& idx);
/// Relative Frobenius distance, zero when both are zero.
double rel_error(const DenseTensor& approx, const DenseTensor& ref);
bool non_increasing(const std::vector<double>& v, double rel_slack = 1e-12);

}  // namespace tenkit::cli
