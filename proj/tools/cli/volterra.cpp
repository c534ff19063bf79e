#include <algorithm>

#include "command.hpp"
#include "tenkit/error.hpp"
#include "tenkit/random.hpp"
#include "tenkit/volterra.hpp"

namespace tenkit::cli {

namespace {

struct KernelArgs {
  std::string kernel;
  std::vector<double> lowpass;
  double dt = 1.0;
  std::string input;
  Index random = 0;
  int max_iters = 500;
};

VolterraKernel3 load_kernel(const KernelArgs& a) {
  if (!a.kernel.empty() && !a.lowpass.empty()) throw ValidationError("give --kernel or --lowpass, not both");
  if (!a.lowpass.empty()) {
    if (a.lowpass.size() != 2 || a.lowpass[0] < 1) throw ValidationError("--lowpass takes memory,tau");
    return lowpass_kernel(static_cast<Index>(a.lowpass[0]), a.lowpass[1], a.dt);
  }
  if (a.kernel.empty()) throw ValidationError("--kernel or --lowpass is required");
  VolterraKernel3 k;
  k.h = io::read_ten(a.kernel);
  k.dt = a.dt;
  fs::path meta = a.kernel;
  meta.replace_extension(".json");
  if (fs::exists(meta)) {
    const json j = io::read_json(meta);
    if (j.contains("dt")) k.dt = j["dt"].get<double>();
  }
  k.validate();
  return k;
}

Vector load_input(const KernelArgs& a, std::uint64_t seed) {
  if (!a.input.empty() && a.random > 0) throw ValidationError("give --input or --random, not both");
  if (a.random > 0) return Rng(seed).normal_vector(a.random);
  if (a.input.empty()) throw ValidationError("--input or --random is required");
  std::vector<std::string> header;
  const auto rows = io::read_csv(a.input, &header);
  const auto it = std::find(header.begin(), header.end(), "u");
  const std::size_t col = it == header.end() ? header.size() - 1 : static_cast<std::size_t>(it - header.begin());
  Vector u(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (col >= rows[k].size()) throw IoError(a.input + ": row " + std::to_string(k + 2) + " is too short");
    u[static_cast<Index>(k)] = rows[k][col];
  }
  return u;
}

void add_kernel_options(CLI::App* sub, KernelArgs& a) {
  sub->add_option("--kernel", a.kernel, "M x M x M kernel (.ten); a sibling .json may give dt");
  sub->add_option("--lowpass", a.lowpass, "Built-in decaying kernel: memory,tau")->delimiter(',');
  sub->add_option("--dt", a.dt, "Sample period")->capture_default_str();
  sub->add_option("--input", a.input, "Input CSV (column u, or the last column)");
  sub->add_option("--random", a.random, "Seeded standard-normal input of this length");
  sub->add_option("--max-iters", a.max_iters, "ALS sweeps for the kernel CPD")->capture_default_str();
}

struct SimulateArgs {
  KernelArgs k;
  Index rank = 0;
};

void simulate_cmd(const SimulateArgs& a, Context& ctx) {
  const VolterraKernel3 kernel = load_kernel(a.k);
  const Vector u = load_input(a.k, ctx.common.seed);
  const Vector direct = direct_response(kernel, u);
  std::vector<std::string> header{"k", "t", "u", "y_direct"};
  Vector factored;
  if (a.rank > 0) {
    CpdConfig cfg;
    cfg.max_iters = a.k.max_iters;
    cfg.seed = ctx.common.seed;
    const FactoredKernel3 fk = factor_kernel(kernel, a.rank, cfg);
    factored = factored_response(fk, u, ctx.common.threads);
    header.push_back("y_factored");
    ctx.diagnostics["rank"] = fk.rank();
    ctx.diagnostics["kernel_fit_error"] = fk.fit_error;
    const double dn = direct.norm();
    ctx.diagnostics["response_rel_error"] = dn > 0 ? (factored - direct).norm() / dn : (factored - direct).norm();
  }
  std::vector<std::vector<double>> rows;
  for (Index k = 0; k < u.size(); ++k) {
    std::vector<double> row{static_cast<double>(k + 1), (k + 1) * kernel.dt, u[k], direct[k]};
    if (a.rank > 0) row.push_back(factored[k]);
    rows.push_back(std::move(row));
  }
  io::write_csv(ctx.out / "response.csv", header, rows);
  ctx.diagnostics["memory"] = kernel.memory();
  ctx.diagnostics["samples"] = u.size();
}

struct TradeoffArgs {
  KernelArgs k;
  std::vector<Index> ranks{1, 2, 4, 6, 8, 10};
  int runs = 5;
};

void tradeoff_cmd(const TradeoffArgs& a, Context& ctx) {
  const VolterraKernel3 kernel = load_kernel(a.k);
  const Vector u = load_input(a.k, ctx.common.seed);
  TradeoffOptions opts;
  opts.runs = a.runs;
  opts.cpd.max_iters = a.k.max_iters;
  opts.cpd.seed = ctx.common.seed;
  const std::vector<TradeoffRow> rows = tradeoff_report(kernel, u, a.ranks, opts);
  std::vector<std::vector<double>> csv;
  json errors = json::array(), timing = json::array();
  for (const TradeoffRow& r : rows) {
    csv.push_back({static_cast<double>(r.rank), r.kernel_fit_error, r.response_rel_error, r.direct_seconds,
                   r.factored_seconds, r.speedup});
    errors.push_back({{"rank", r.rank}, {"kernel_fit_error", r.kernel_fit_error}, {"response_rel_error", r.response_rel_error}});
    timing.push_back({{"rank", r.rank}, {"direct_seconds", r.direct_seconds}, {"factored_seconds", r.factored_seconds},
                      {"speedup", r.speedup}});
  }
  io::write_csv(ctx.out / "tradeoff.csv",
                {"rank", "kernel_fit_error", "response_rel_error", "direct_seconds", "factored_seconds", "speedup"}, csv);
  ctx.diagnostics["rows"] = errors;
  ctx.diagnostics["memory"] = kernel.memory();
  ctx.diagnostics["samples"] = u.size();
  ctx.timing["rows"] = timing;
}

}  // namespace

void register_volterra(CLI::App& app, Registry& reg) {
  CLI::App* v = app.add_subcommand("volterra", "Third-order Volterra responses");
  v->require_subcommand(1);

  auto s = std::make_shared<SimulateArgs>();
  CLI::App* ss = v->add_subcommand("simulate", "Direct (and optionally rank-R factored) response");
  add_kernel_options(ss, s->k);
  ss->add_option("--rank", s->rank, "CP rank of the factored kernel (0: direct only)")->capture_default_str();
  add_common(ss, reg);
  bind(ss, reg, "volterra simulate", [s](Context& ctx) { simulate_cmd(*s, ctx); });

  auto t = std::make_shared<TradeoffArgs>();
  CLI::App* ts = v->add_subcommand("tradeoff", "Error and runtime against CP rank");
  add_kernel_options(ts, t->k);
  ts->add_option("--ranks", t->ranks, "Ranks to report")->delimiter(',')->capture_default_str();
  ts->add_option("--runs", t->runs, "Timing repetitions (median)")->capture_default_str();
  add_common(ts, reg);
  bind(ts, reg, "volterra tradeoff", [t](Context& ctx) { tradeoff_cmd(*t, ctx); });
}

}  // namespace tenkit::cli
