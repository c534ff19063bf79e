#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "command.hpp"
#include "tenkit/error.hpp"
#include "tenkit/model_io.hpp"
#include "tenkit/uq.hpp"

namespace tenkit::cli {

namespace {

/// 1 + 0.8 x1 - 0.5 x2 x3 + 0.3 psi2(x4) + 0.2 x5 x6 in standard normals.
double poly6(const Vector& x) {
  return 1.0 + 0.8 * x[0] - 0.5 * x[1] * x[2] + 0.3 * (x[3] * x[3] - 1.0) / std::sqrt(2.0) + 0.2 * x[4] * x[5];
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

/// External program: one whitespace-separated point per line on stdin, one
/// value per line on stdout. The whole batch goes through one process.
class ExecOracle : public SampleOracle {
public:
  explicit ExecOracle(fs::path program) : program_(std::move(program)) {
    if (!fs::exists(program_)) throw IoError("oracle program not found: " + program_.string());
  }

  double evaluate(const Vector& xi) const override { return evaluate_batch(Matrix(xi), 1)[0]; }

  Vector evaluate_batch(const Matrix& points, int) const override {
    static std::atomic<int> counter{0};
    const fs::path stem = fs::temp_directory_path() /
                          ("tenkit_oracle_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    const fs::path in = stem.string() + ".in", out = stem.string() + ".out";
    struct Cleanup {
      fs::path a, b;
      ~Cleanup() {
        std::error_code ec;
        fs::remove(a, ec);
        fs::remove(b, ec);
      }
    } cleanup{in, out};

    std::string text;
    for (Index j = 0; j < points.cols(); ++j) {
      for (Index i = 0; i < points.rows(); ++i) text += (i ? " " : "") + io::format_double(points(i, j));
      text += "\n";
    }
    io::write_file_atomic(in, text);
    const std::string cmd = shell_quote(program_.string()) + " < " + shell_quote(in.string()) + " > " +
                            shell_quote(out.string());
    const int status = std::system(cmd.c_str());
    if (status != 0) throw IoError("oracle program exited with status " + std::to_string(status));

    std::istringstream lines(io::read_file(out));
    Vector y(points.cols());
    std::string line;
    Index k = 0;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (k == y.size()) throw IoError("oracle program printed more values than points");
      char* end = nullptr;
      y[k] = std::strtod(line.c_str(), &end);
      if (end == line.c_str()) throw IoError("oracle program printed a non-numeric line: '" + line + "'");
      if (!std::isfinite(y[k])) throw NumericalError("oracle returned a non-finite value at sample " + std::to_string(k));
      ++k;
    }
    if (k != y.size()) {
      throw IoError("oracle program printed " + std::to_string(k) + " values for " + std::to_string(y.size()) + " points");
    }
    return y;
  }

private:
  fs::path program_;
};

std::unique_ptr<SampleOracle> make_oracle(const std::string& spec, int dims) {
  if (spec.rfind("exec:", 0) == 0) return std::make_unique<ExecOracle>(spec.substr(5));
  if (spec == "builtin:poly6") {
    if (dims != 6) throw ValidationError("builtin:poly6 needs --dims 6");
    return std::make_unique<FunctionOracle>(poly6, true);
  }
  if (spec == "builtin:sum") return std::make_unique<FunctionOracle>([](const Vector& x) { return x.sum(); }, true);
  throw ValidationError("unknown oracle '" + spec + "' (builtin:poly6, builtin:sum or exec:<path>)");
}

Measure measure_named(const std::string& name) {
  if (name == "gaussian") return Measure::gaussian();
  if (name == "uniform") return Measure::uniform();
  throw ValidationError("unknown measure '" + name + "'");
}

void write_expansion_outputs(Context& ctx, const GpcExpansion& e, Index mc_samples, int bins) {
  io::write_json(ctx.out / "expansion.json", io::expansion_to_json(e));
  std::vector<std::vector<double>> rows;
  for (std::size_t j = 0; j < e.multi_indices.size(); ++j) {
    std::vector<double> row(e.multi_indices[j].begin(), e.multi_indices[j].end());
    row.push_back(e.coefficients[static_cast<Index>(j)]);
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header = numbered("alpha_", e.dims());
  header.push_back("coefficient");
  io::write_csv(ctx.out / "coefficients.csv", header, rows);

  const Moments m = gpc_moments(e);
  ctx.diagnostics["mean"] = m.mean;
  ctx.diagnostics["variance"] = m.variance;
  if (mc_samples > 0) {
    const Histogram h = histogram(gpc_sample(e, mc_samples, ctx.common.seed + 1), bins);
    std::vector<std::vector<double>> hr;
    for (Index b = 0; b < h.density.size(); ++b) hr.push_back({h.edges[b], h.edges[b + 1], h.density[b]});
    io::write_csv(ctx.out / "density.csv", {"bin_left", "bin_right", "density"}, hr);
  }
}

struct CollocateArgs {
  int dims = 0;
  int order = 2;
  Index budget = 0;
  Index nodes = 0;
  std::string measure = "gaussian";
  std::string oracle;
  Index rank = 5;
  double lambda = 1e-6;
  Index holdout = 0;
  int restarts = 8;
  int max_iters = 500;
  Index mc_samples = 100000;
  int bins = 40;
};

void collocate(const CollocateArgs& a, Context& ctx) {
  if (a.dims < 1) throw ValidationError("--dims must be positive");
  const Index n = a.nodes > 0 ? a.nodes : a.order + 1;
  const ParamSpec spec = ParamSpec::uniform_sizes(std::vector<Measure>(static_cast<std::size_t>(a.dims), measure_named(a.measure)), n);
  const auto oracle = make_oracle(a.oracle, a.dims);
  const double grid_size = std::pow(static_cast<double>(n), a.dims);
  ctx.diagnostics["grid_size"] = grid_size;

  GpcExpansion e;
  if (a.budget == 0 || static_cast<double>(a.budget) >= grid_size) {
    ctx.diagnostics["method"] = "full-grid";
    CollocationOptions opts;
    opts.threads = ctx.common.threads;
    e = collocate_full(*oracle, spec, a.order, opts);
    ctx.diagnostics["evaluations"] = grid_size;
  } else {
    ctx.diagnostics["method"] = "tensor-recovery";
    RecoveryConfig cfg;
    cfg.rank = a.rank;
    cfg.lambda = a.lambda;
    cfg.holdout = a.holdout;
    cfg.seed = ctx.common.seed;
    cfg.threads = ctx.common.threads;
    cfg.completion.restarts = a.restarts;
    cfg.completion.max_iters = a.max_iters;
    cfg.completion.threads = ctx.common.threads;
    cfg.completion.seed = ctx.common.seed;
    const RecoveryResult r = collocate_tensor_recovery(*oracle, spec, a.order, a.budget, cfg);
    e = r.expansion;
    const RecoveryDiagnostics& d = r.diagnostics;
    ctx.diagnostics["evaluations"] = d.sample_indices.size() + d.holdout_indices.size();
    ctx.diagnostics["converged"] = d.converged;
    ctx.diagnostics["sparsity"] = d.sparsity;
    ctx.diagnostics["iterations"] = d.objective.empty() ? 0 : d.objective.size() - 1;
    ctx.diagnostics["final_objective"] = d.objective.empty() ? json(nullptr) : json(d.objective.back());
    ctx.diagnostics["objective_monotone"] = non_increasing(d.objective);
    ctx.diagnostics["heldout_rel_error"] = d.heldout_rel_error ? json(*d.heldout_rel_error) : json(nullptr);
    json idx = json::array(), hold = json::array();
    for (const auto& i : d.sample_indices) idx.push_back(to_json(i));
    for (const auto& i : d.holdout_indices) hold.push_back(to_json(i));
    ctx.diagnostics["sample_indices"] = idx;
    ctx.diagnostics["holdout_indices"] = hold;
  }
  write_expansion_outputs(ctx, e, a.mc_samples, a.bins);
}

struct HierArgs {
  std::string expansion;
  Index nodes = 5;
  Index count = 4;
  double eps_tt = 1e-12;
  double round_eps = 1e-13;
};

void hier(const HierArgs& a, Context& ctx) {
  const GpcExpansion e = io::expansion_from_json(io::read_json(a.expansion));
  const QuadratureGrid grid = build_quadrature(ParamSpec::uniform_sizes(e.measures, a.nodes));
  HierarchicalConfig cfg;
  cfg.eps_tt = a.eps_tt;
  cfg.round_eps = a.round_eps;
  const HierarchicalResult h = hierarchical_basis(e, grid, a.count, cfg);
  ctx.diagnostics["degree"] = h.degree;
  ctx.diagnostics["tt_ranks"] = h.tt_ranks;
  ctx.diagnostics["tt_rel_error"] = h.tt_rel_error;
  std::vector<std::vector<double>> rule, rec;
  for (Index i = 0; i < h.rule.nodes.size(); ++i) rule.push_back({h.rule.nodes[i], h.rule.weights[i]});
  for (Index k = 0; k < h.recurrence.size(); ++k) {
    rec.push_back({static_cast<double>(k), h.recurrence.alpha[k], h.recurrence.beta[k]});
  }
  io::write_csv(ctx.out / "rule.csv", {"node", "weight"}, rule);
  io::write_csv(ctx.out / "recurrence.csv", {"k", "alpha", "beta"}, rec);
}

}  // namespace

void register_uq(CLI::App& app, Registry& reg) {
  CLI::App* uq = app.add_subcommand("uq", "Stochastic collocation");
  uq->require_subcommand(1);

  auto c = std::make_shared<CollocateArgs>();
  CLI::App* col = uq->add_subcommand("collocate", "gPC coefficients from a full grid or a sampled subset");
  col->add_option("--dims", c->dims, "Number of parameters")->required();
  col->add_option("--order", c->order, "Total polynomial degree")->capture_default_str();
  col->add_option("--budget", c->budget, "Oracle evaluations for recovery (0 or >= grid: full grid)")->capture_default_str();
  col->add_option("--nodes", c->nodes, "Gauss nodes per parameter (0: order + 1)")->capture_default_str();
  col->add_option("--measure", c->measure, "gaussian | uniform")->capture_default_str();
  col->add_option("--oracle", c->oracle, "builtin:poly6 | builtin:sum | exec:<path>")->required();
  col->add_option("--rank", c->rank, "CP rank of the completed grid tensor")->capture_default_str();
  col->add_option("--lambda", c->lambda, "Sparsity weight")->capture_default_str();
  col->add_option("--holdout", c->holdout, "Extra evaluations for a held-out error")->capture_default_str();
  col->add_option("--restarts", c->restarts, "Completion starts screened")->capture_default_str();
  col->add_option("--max-iters", c->max_iters, "Completion iterations")->capture_default_str();
  col->add_option("--mc-samples", c->mc_samples, "Surrogate draws for density.csv (0: skip)")->capture_default_str();
  col->add_option("--bins", c->bins, "Histogram bins")->capture_default_str();
  add_common(col, reg);
  bind(col, reg, "uq collocate", [c](Context& ctx) { collocate(*c, ctx); });

  auto h = std::make_shared<HierArgs>();
  CLI::App* hi = uq->add_subcommand("hier", "Gauss rule for the output of a gPC surrogate");
  hi->add_option("--expansion", h->expansion, "expansion.json from uq collocate")->required();
  hi->add_option("--nodes", h->nodes, "Grid nodes per parameter")->capture_default_str();
  hi->add_option("--count", h->count, "Basis size / rule points")->capture_default_str();
  hi->add_option("--eps-tt", h->eps_tt, "TT compression accuracy")->capture_default_str();
  hi->add_option("--round-eps", h->round_eps, "TT rounding accuracy")->capture_default_str();
  add_common(hi, reg);
  bind(hi, reg, "uq hier", [h](Context& ctx) { hier(*h, ctx); });
}

}  // namespace tenkit::cli
