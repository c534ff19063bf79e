#include <cmath>
#include <optional>

#include "command.hpp"
#include "tenkit/error.hpp"
#include "tenkit/model_io.hpp"

namespace tenkit::cli {

namespace {

struct DecomposeArgs {
  std::string method;
  std::string in;
  std::optional<Index> rank;
  std::optional<double> eps;
  std::vector<Index> ranks;
  Index max_rank = 16;
  int max_iters = 500;
  double tol = 1e-12;
  int restarts = 1;
};

void write_history(const fs::path& path, const std::vector<double>& history) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < history.size(); ++i) rows.push_back({static_cast<double>(i + 1), history[i]});
  io::write_csv(path, {"sweep", "rel_residual"}, rows);
}

void report_cpd(Context& ctx, const CpdReport& r) {
  ctx.diagnostics["rel_residual"] = r.rel_residual;
  ctx.diagnostics["iterations"] = r.iterations;
  ctx.diagnostics["converged"] = r.converged;
  ctx.diagnostics["regularized"] = r.regularized;
  write_history(ctx.out / "history.csv", r.history);
}

void decompose(const DecomposeArgs& a, Context& ctx) {
  const DenseTensor x = io::read_ten(a.in);
  const double norm = frobenius_norm(x);
  ctx.diagnostics["shape"] = x.shape().dims();
  ctx.diagnostics["norm"] = norm;
  const fs::path model_dir = ctx.out / "model";
  CpdConfig cfg;
  cfg.max_iters = a.max_iters;
  cfg.tol = a.tol;
  cfg.restarts = a.restarts;
  cfg.seed = ctx.common.seed;

  if (a.method == "cpd") {
    CpdResult r;
    if (a.rank) {
      r = cpd_als(x, *a.rank, cfg);
    } else if (a.eps) {
      IncrementalCpdResult inc = cpd_fit_incremental(x, *a.eps, a.max_rank, cfg);
      ctx.diagnostics["target_met"] = inc.target_met;
      r = {std::move(inc.model), std::move(inc.report)};
    } else {
      throw ValidationError("cpd needs --rank or --eps");
    }
    report_cpd(ctx, r.report);
    ctx.diagnostics["rank"] = r.model.rank();
    ctx.diagnostics["parameter_count"] = parameter_count(r.model);
    ctx.diagnostics["rel_error"] = rel_error(densify(r.model), x);
    io::write_model(model_dir, r.model);
  } else if (a.method == "hosvd") {
    const TuckerModel m = hosvd(x);
    ctx.diagnostics["ranks"] = m.multilinear_rank();
    ctx.diagnostics["parameter_count"] = parameter_count(m);
    ctx.diagnostics["rel_error"] = rel_error(densify(m), x);
    io::write_model(model_dir, m);
  } else if (a.method == "tucker") {
    if (a.ranks.empty()) throw ValidationError("tucker needs --ranks");
    const TuckerResult r = tucker_truncate(x, a.ranks);
    ctx.diagnostics["ranks"] = r.model.multilinear_rank();
    ctx.diagnostics["parameter_count"] = parameter_count(r.model);
    ctx.diagnostics["rel_error"] = r.rel_error;
    io::write_model(model_dir, r.model);
  } else if (a.method == "tt") {
    if (!a.eps) throw ValidationError("tt needs --eps");
    const TTModel m = tt_svd(x, *a.eps);
    ctx.diagnostics["ranks"] = m.ranks();
    ctx.diagnostics["parameter_count"] = parameter_count(m);
    ctx.diagnostics["rel_error"] = rel_error(densify(m), x);
    io::write_model(model_dir, m);
  } else if (a.method == "ttr1") {
    TTr1Model m = ttr1_svd(x);
    std::size_t keep = m.terms.size();
    if (a.eps) {
      keep = 0;
      while (keep < m.terms.size() && m.truncation_error(keep) > *a.eps * norm) ++keep;
    }
    if (a.rank) keep = std::min(keep, static_cast<std::size_t>(*a.rank));
    ctx.diagnostics["full_terms"] = m.terms.size();
    ctx.diagnostics["truncation_error"] = m.truncation_error(keep);
    m = m.truncated(keep);
    ctx.diagnostics["terms"] = m.terms.size();
    ctx.diagnostics["rel_error"] = m.terms.empty() ? 1.0 : rel_error(densify(m), x);
    io::write_model(model_dir, m);
  } else if (a.method == "cpd-sym") {
    if (!a.rank) throw ValidationError("cpd-sym needs --rank");
    const SymmetricCpdResult r = cpd_symmetric(x, *a.rank, cfg);
    report_cpd(ctx, r.report);
    ctx.diagnostics["rank"] = r.model.rank();
    ctx.diagnostics["rel_error"] = rel_error(densify(r.model), x);
    io::write_model(model_dir, r.model);
  } else {
    throw ValidationError("unknown method '" + a.method + "'");
  }
}

}  // namespace

void register_decompose(CLI::App& app, Registry& reg) {
  auto args = std::make_shared<DecomposeArgs>();
  CLI::App* sub = app.add_subcommand("decompose", "Factor a dense tensor stored as .ten");
  sub->add_option("--method", args->method, "cpd | hosvd | tucker | tt | ttr1 | cpd-sym")
      ->required()
      ->check(CLI::IsMember({"cpd", "hosvd", "tucker", "tt", "ttr1", "cpd-sym"}));
  sub->add_option("--in", args->in, "Input tensor (.ten)")->required();
  sub->add_option("--rank", args->rank, "CP rank, or the number of TTr1 terms kept");
  sub->add_option("--eps", args->eps, "Relative accuracy (tt, ttr1, or incremental cpd)");
  sub->add_option("--ranks", args->ranks, "Tucker multilinear rank")->delimiter(',');
  sub->add_option("--max-rank", args->max_rank, "Largest rank tried by incremental cpd")->capture_default_str();
  sub->add_option("--max-iters", args->max_iters, "ALS sweeps")->capture_default_str();
  sub->add_option("--tol", args->tol, "ALS stopping tolerance")->capture_default_str();
  sub->add_option("--restarts", args->restarts, "ALS restarts")->capture_default_str();
  add_common(sub, reg);
  bind(sub, reg, "decompose", [args](Context& ctx) { decompose(*args, ctx); });
}

}  // namespace tenkit::cli
