#include <optional>

#include "command.hpp"
#include "tenkit/completion.hpp"
#include "tenkit/error.hpp"
#include "tenkit/model_io.hpp"

namespace tenkit::cli {

namespace {

struct CompleteArgs {
  std::string method;
  std::string samples;
  std::vector<Index> shape;
  Index rank = 1;
  double lambda = 0.0;
  std::string transforms;
  std::vector<double> alpha;
  std::string truth;
  int max_iters = 0;
  double tol = 0.0;
  int restarts = 1;
};

void write_history(const fs::path& path, const CompletionReport& r) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < r.objective.size(); ++i) {
    const double res = i < r.observed_residual.size() ? r.observed_residual[i] : std::nan("");
    const double change = i >= 1 && i - 1 < r.factor_change.size() ? r.factor_change[i - 1] : std::nan("");
    rows.push_back({static_cast<double>(i), r.objective[i], res, change});
  }
  io::write_csv(path, {"iteration", "objective", "observed_residual", "factor_change"}, rows);
}

void report(Context& ctx, const CompletionReport& r) {
  ctx.diagnostics["iterations"] = r.iterations;
  ctx.diagnostics["converged"] = r.converged;
  ctx.diagnostics["underdetermined"] = r.underdetermined;
  ctx.diagnostics["final_objective"] = r.objective.empty() ? json(nullptr) : json(r.objective.back());
  ctx.diagnostics["final_observed_residual"] =
      r.observed_residual.empty() ? json(nullptr) : json(r.observed_residual.back());
  const bool monotone = non_increasing(r.objective);
  ctx.diagnostics["objective_monotone"] = monotone;
  if (!monotone) throw NumericalError("completion objective increased between iterations");
  write_history(ctx.out / "history.csv", r);
}

void complete(const CompleteArgs& a, Context& ctx) {
  if (a.shape.empty()) throw ValidationError("--shape is required");
  const Shape shape(a.shape);
  const SampleSet samples = read_samples_csv(a.samples, shape);
  ctx.diagnostics["samples"] = samples.size();
  std::optional<DenseTensor> truth;
  if (!a.truth.empty()) truth = io::read_ten(a.truth);

  CompletionConfig cfg;
  if (a.max_iters > 0) cfg.max_iters = a.max_iters;
  if (a.tol > 0) cfg.tol = a.tol;
  cfg.seed = ctx.common.seed;
  cfg.threads = ctx.common.threads;
  cfg.restarts = a.restarts;

  DenseTensor completed;
  if (a.method == "rank") {
    const CompletionResult r = complete_fixed_rank(samples, a.rank, cfg);
    report(ctx, r.report);
    io::write_model(ctx.out / "model", r.model);
    completed = densify(r.model);
  } else if (a.method == "lrsparse") {
    if (a.transforms.empty()) throw ValidationError("lrsparse needs --transforms");
    LrSparseProblem p{samples, io::rank1_list_from_json(io::read_json(a.transforms)), a.lambda, a.rank};
    const LrSparseResult r = complete_lr_sparse(p, cfg);
    report(ctx, r.report);
    ctx.diagnostics["sparsity"] = r.sparsity;
    std::vector<std::vector<double>> rows;
    for (Index k = 0; k < r.coefficients.size(); ++k) rows.push_back({static_cast<double>(k + 1), r.coefficients[k]});
    io::write_csv(ctx.out / "coefficients.csv", {"transform", "coefficient"}, rows);
    io::write_model(ctx.out / "model", r.model);
    completed = densify(r.model);
  } else if (a.method == "nuclear") {
    NuclearConfig ncfg;
    if (a.max_iters > 0) ncfg.max_iters = a.max_iters;
    if (a.tol > 0) ncfg.tol = a.tol;
    ncfg.seed = ctx.common.seed;
    const NuclearResult r = complete_nuclear(samples, a.alpha, ncfg);
    ctx.diagnostics["iterations"] = r.iterations;
    ctx.diagnostics["converged"] = r.converged;
    ctx.diagnostics["final_objective"] = r.objective.empty() ? json(nullptr) : json(r.objective.back());
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < r.objective.size(); ++i) {
      rows.push_back({static_cast<double>(i + 1), r.objective[i],
                      i < r.observed_residual.size() ? r.observed_residual[i] : std::nan("")});
    }
    io::write_csv(ctx.out / "history.csv", {"iteration", "objective", "observed_residual"}, rows);
    io::write_ten(ctx.out / "completed.ten", r.x);
    completed = r.x;
  } else {
    throw ValidationError("unknown method '" + a.method + "'");
  }
  if (truth) ctx.diagnostics["rel_error"] = rel_error(completed, *truth);
}

}  // namespace

void register_complete(CLI::App& app, Registry& reg) {
  auto args = std::make_shared<CompleteArgs>();
  CLI::App* sub = app.add_subcommand("complete", "Complete a tensor from sampled entries");
  sub->add_option("--method", args->method, "rank | lrsparse | nuclear")
      ->required()
      ->check(CLI::IsMember({"rank", "lrsparse", "nuclear"}));
  sub->add_option("--samples", args->samples, "CSV of 1-based indices and values")->required();
  sub->add_option("--shape", args->shape, "Tensor extents")->delimiter(',')->required();
  sub->add_option("--rank", args->rank, "CP rank")->capture_default_str();
  sub->add_option("--lambda", args->lambda, "Sparsity weight (lrsparse)")->capture_default_str();
  sub->add_option("--transforms", args->transforms, "JSON list of rank-1 transforms (lrsparse)");
  sub->add_option("--alpha", args->alpha, "Per-mode nuclear-norm weights")->delimiter(',');
  sub->add_option("--truth", args->truth, "Full tensor (.ten) for a recovery error report");
  sub->add_option("--max-iters", args->max_iters, "Iteration cap (0: solver default)")->capture_default_str();
  sub->add_option("--tol", args->tol, "Stopping tolerance (0: solver default)")->capture_default_str();
  sub->add_option("--restarts", args->restarts, "ALS starts screened before the solve")->capture_default_str();
  add_common(sub, reg);
  bind(sub, reg, "complete", [args](Context& ctx) { complete(*args, ctx); });
}

}  // namespace tenkit::cli
