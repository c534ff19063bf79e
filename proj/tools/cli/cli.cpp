#include "cli.hpp"

#include <Eigen/Core>
#include <chrono>
#include <cstdlib>
#include <iostream>

#include "command.hpp"
#include "tenkit/error.hpp"

namespace tenkit::cli {

namespace {

std::uint64_t default_seed() {
  const char* env = std::getenv("TENKIT_SEED");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 0);
  if (*end != '\0') throw ValidationError(std::string("TENKIT_SEED is not an integer: '") + env + "'");
  return v;
}

json versions() {
  return {{"tenkit", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"ten_format", std::string(io::kTenMagic)}};
}

/// Every long option of `sub`, as given or defaulted.
json config_echo(const CLI::App* sub) {
  json cfg = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (opt->count() == 0) {
      cfg[name] = opt->get_default_str().empty() ? json(nullptr) : json(opt->get_default_str());
    } else if (opt->get_expected_max() > 1 || opt->results().size() > 1) {
      cfg[name] = opt->results();
    } else if (opt->get_type_size() == 0) {
      cfg[name] = true;
    } else {
      cfg[name] = opt->results().front();
    }
  }
  return cfg;
}

void write_diagnostic(const Context& ctx, const std::string& command, const std::string& kind, const std::string& what) {
  if (ctx.out.empty()) return;
  try {
    fs::create_directories(ctx.out);
    io::write_json(ctx.out / "diagnostic.json", {{"command", command}, {"error", kind}, {"message", what}});
  } catch (const std::exception&) {
    // The original failure is what gets reported.
  }
}

}  // namespace

void add_common(CLI::App* sub, Registry& reg, bool out_required) {
  auto* out = sub->add_option("--out", reg.common.out, "Output directory");
  if (out_required) out->required();
  sub->add_option("--seed", reg.common.seed, "Random seed (default: TENKIT_SEED or 0)");
  sub->add_option("--threads", reg.common.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

void bind(CLI::App* sub, Registry& reg, std::string name, Action action) {
  sub->callback([&reg, sub, name = std::move(name), action = std::move(action)] {
    reg.chosen = action;
    reg.chosen_app = sub;
    reg.chosen_name = name;
  });
}

std::vector<std::string> numbered(const std::string& stem, Index count) {
  std::vector<std::string> out;
  for (Index k = 1; k <= count; ++k) out.push_back(stem + std::to_string(k));
  return out;
}

json to_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

json to_json(const MultiIndex& idx) { return idx.values(); }

double rel_error(const DenseTensor& approx, const DenseTensor& ref) {
  if (!(approx.shape() == ref.shape())) throw DimensionError("comparison tensors differ in shape");
  const double norm = ref.data().norm();
  const double diff = (approx.data() - ref.data()).norm();
  return norm > 0 ? diff / norm : diff;
}

bool non_increasing(const std::vector<double>& v, double rel_slack) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1] * (1 + rel_slack) + 1e-300) return false;
  }
  return true;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const SelftestFn& selftest) {
  CLI::App app{"tenkit: tensor decompositions, completion, UQ, model reduction and Volterra responses"};
  app.name("tenkit");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Registry reg;

  register_decompose(app, reg);
  register_complete(app, reg);
  register_uq(app, reg);
  register_mor(app, reg);
  register_volterra(app, reg);

  bool selftest_ok = true;
  CLI::App* st = app.add_subcommand("selftest", "Run the acceptance suite");
  add_common(st, reg, false);
  bind(st, reg, "selftest", [&](Context& ctx) {
    if (!selftest) throw ValidationError("this build has no acceptance suite linked");
    json report;
    selftest_ok = selftest(out, report);
    ctx.diagnostics["criteria"] = report;
    ctx.diagnostics["passed"] = selftest_ok;
  });

  Context ctx;
  try {
    reg.common.seed = default_seed();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  if (!reg.chosen) {
    err << app.help();
    return 1;
  }

  ctx.common = reg.common;
  ctx.out = reg.common.out;
  const std::string& command = reg.chosen_name;
  try {
    if (!ctx.out.empty()) fs::create_directories(ctx.out);
    const auto start = std::chrono::steady_clock::now();
    reg.chosen(ctx);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ctx.timing["total_seconds"] = seconds;

    if (!ctx.out.empty()) {
      json manifest;
      manifest["command"] = command;
      manifest["config"] = config_echo(reg.chosen_app);
      manifest["seed"] = ctx.common.seed;
      manifest["threads"] = ctx.common.threads;
      manifest["versions"] = versions();
      manifest["diagnostics"] = ctx.diagnostics;
      manifest["timing"] = ctx.timing;
      io::write_json(ctx.out / "manifest.json", manifest);
    }
    if (command == "selftest" && !selftest_ok) {
      write_diagnostic(ctx, command, "acceptance", "one or more acceptance criteria failed");
      err << "error: one or more acceptance criteria failed\n";
      return 3;
    }
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ScaleError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    write_diagnostic(ctx, command, "numerical", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    write_diagnostic(ctx, command, "internal", e.what());
    return 3;
  }
}

int run(int argc, char** argv, const SelftestFn& selftest) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr, selftest);
}

}  // namespace tenkit::cli
