#include <cmath>
#include <memory>
#include <numbers>
#include <optional>

#include "command.hpp"
#include "tenkit/error.hpp"
#include "tenkit/model_io.hpp"

namespace tenkit::cli {

namespace {

/// "zero", "step:a" or "sine:a,f", applied to every input channel.
InputSignal parse_input(const std::string& spec, Index m) {
  auto numbers = [&](const std::string& s) {
    std::vector<double> v;
    std::size_t pos = 0;
    while (pos <= s.size()) {
      const std::size_t comma = s.find(',', pos);
      const std::string part = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      std::size_t used = 0;
      try {
        v.push_back(std::stod(part, &used));
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != part.size()) throw ValidationError("bad number '" + part + "' in input spec '" + spec + "'");
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return v;
  };
  if (spec == "zero") return [m](double) { return Vector(Vector::Zero(m)); };
  if (spec.rfind("step:", 0) == 0) {
    const auto v = numbers(spec.substr(5));
    if (v.size() != 1) throw ValidationError("step input takes one amplitude");
    return [m, a = v[0]](double) { return Vector(Vector::Constant(m, a)); };
  }
  if (spec.rfind("sine:", 0) == 0) {
    const auto v = numbers(spec.substr(5));
    if (v.size() != 2) throw ValidationError("sine input takes amplitude,frequency");
    return [m, a = v[0], f = v[1]](double t) { return Vector(Vector::Constant(m, a * std::sin(2 * std::numbers::pi * f * t))); };
  }
  throw ValidationError("unknown input spec '" + spec + "' (zero, step:a, sine:a,f)");
}

struct LoadedSystem {
  std::unique_ptr<Dynamics> dyn;
  const PolynomialSystem* dense = nullptr;
  const FactoredSystem* factored = nullptr;
  std::optional<Matrix> basis;
};

LoadedSystem load_system(const fs::path& dir) {
  const json j = io::read_json(dir / "system.json");
  const std::string kind = j.value("kind", std::string());
  LoadedSystem out;
  if (kind == "polynomial-system") {
    auto s = std::make_unique<PolynomialSystem>(io::read_system(dir));
    out.dense = s.get();
    out.dyn = std::move(s);
  } else if (kind == "factored-system") {
    Matrix v;
    auto s = std::make_unique<FactoredSystem>(io::read_factored_system(dir, &v));
    if (v.size() > 0) out.basis = std::move(v);
    out.factored = s.get();
    out.dyn = std::move(s);
  } else {
    throw IoError((dir / "system.json").string() + ": unknown system kind '" + kind + "'");
  }
  return out;
}

Vector parse_state(const std::vector<double>& x0, Index n) {
  if (x0.empty()) return Vector::Zero(n);
  if (static_cast<Index>(x0.size()) != n) {
    throw DimensionError("--x0 has " + std::to_string(x0.size()) + " entries for " + std::to_string(n) + " states");
  }
  return Eigen::Map<const Vector>(x0.data(), n);
}

struct SimArgs {
  std::string input = "zero";
  std::vector<double> x0;
  double t0 = 0.0;
  double t_end = 1.0;
  double dt = 1e-2;
  std::string integrator = "rk4";

  SimulationOptions options() const {
    SimulationOptions o;
    o.t0 = t0;
    o.t_end = t_end;
    o.dt = dt;
    o.integrator = integrator == "implicit-euler" ? Integrator::implicit_euler : Integrator::rk4;
    return o;
  }
};

void add_sim_options(CLI::App* sub, SimArgs& s) {
  sub->add_option("--input", s.input, "zero | step:a | sine:a,f")->capture_default_str();
  sub->add_option("--x0", s.x0, "Initial state (default zero)")->delimiter(',');
  sub->add_option("--t0", s.t0, "Start time")->capture_default_str();
  sub->add_option("--t-end", s.t_end, "End time")->capture_default_str();
  sub->add_option("--dt", s.dt, "Time step")->capture_default_str();
  sub->add_option("--integrator", s.integrator, "rk4 | implicit-euler")
      ->check(CLI::IsMember({"rk4", "implicit-euler"}))
      ->capture_default_str();
}

void write_trajectory(const fs::path& path, const Trajectory& tr, const std::string& stem) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    std::vector<double> row{tr.t[k]};
    for (Index i = 0; i < tr.x.rows(); ++i) row.push_back(tr.x(i, static_cast<Index>(k)));
    rows.push_back(std::move(row));
  }
  std::vector<std::string> header{"t"};
  for (const auto& h : numbered(stem, tr.x.rows())) header.push_back(h);
  io::write_csv(path, header, rows);
}

json term_report(const FactoredSystem& s) {
  json terms = json::array();
  const char* names[] = {"quadratic", "cubic", "bilinear"};
  for (const FactoredTerm& t : s.terms) {
    terms.push_back({{"kind", names[static_cast<int>(t.kind)]},
                     {"rank", t.rank()},
                     {"shared", t.shared},
                     {"fit_error", t.fit_error},
                     {"storage", t.storage()}});
  }
  return terms;
}

struct TensorizeArgs {
  std::string system;
  double eps = 1e-8;
  std::optional<Index> rank_b, rank_c, rank_d;
  bool symmetric = false;
  int max_iters = 500;
};

TensorizeOptions tensorize_options(const TensorizeArgs& a, std::uint64_t seed) {
  TensorizeOptions o;
  o.eps = a.eps;
  o.rank_b = a.rank_b;
  o.rank_c = a.rank_c;
  o.rank_d = a.rank_d;
  o.symmetric = a.symmetric;
  o.cpd.max_iters = a.max_iters;
  o.cpd.seed = seed;
  return o;
}

void add_tensorize_options(CLI::App* sub, TensorizeArgs& a) {
  sub->add_option("--eps", a.eps, "Relative CP accuracy per term")->capture_default_str();
  sub->add_option("--rank-b", a.rank_b, "Fixed CP rank of the quadratic term");
  sub->add_option("--rank-c", a.rank_c, "Fixed CP rank of the cubic term");
  sub->add_option("--rank-d", a.rank_d, "Fixed CP rank of the bilinear term");
  sub->add_flag("--symmetric", a.symmetric, "Symmetrize and share one factor over the state modes");
  sub->add_option("--max-iters", a.max_iters, "ALS sweeps")->capture_default_str();
}

void tensorize_cmd(const TensorizeArgs& a, Context& ctx) {
  const PolynomialSystem sys = io::read_system(a.system);
  const TensorizedSystem t = tensorize(sys, tensorize_options(a, ctx.common.seed));
  ctx.diagnostics["states"] = t.states();
  ctx.diagnostics["inputs"] = t.inputs();
  ctx.diagnostics["terms"] = term_report(t);
  ctx.diagnostics["nonlinear_storage"] = t.nonlinear_storage();
  ctx.diagnostics["fit_ok"] = t.fit_ok;
  ctx.diagnostics["warnings"] = t.warnings;
  io::write_factored_system(ctx.out, t);
}

struct ReduceArgs {
  TensorizeArgs tens;
  std::string basis;
  Index q = 0;
  SimArgs train;
};

void reduce_cmd(const ReduceArgs& a, Context& ctx) {
  LoadedSystem loaded = load_system(a.tens.system);
  TensorizedSystem t;
  if (loaded.dense) {
    t = tensorize(*loaded.dense, tensorize_options(a.tens, ctx.common.seed));
    ctx.diagnostics["warnings"] = t.warnings;
  } else {
    if (loaded.basis) throw ValidationError("system is already reduced");
    static_cast<FactoredSystem&>(t) = *loaded.factored;
  }
  Matrix v;
  if (!a.basis.empty()) {
    v = io::read_matrix(a.basis);
  } else {
    if (a.q < 1) throw ValidationError("reduce needs --basis or --q");
    const Dynamics& train = loaded.dense ? static_cast<const Dynamics&>(*loaded.dense) : t;
    const Projection p = build_projection(train, parse_input(a.train.input, t.inputs()),
                                          parse_state(a.train.x0, t.states()), a.train.options(), a.q);
    v = p.V;
    ctx.diagnostics["singular_values"] = to_json(p.singular_values);
    if (!p.warning.empty()) ctx.diagnostics["projection_warning"] = p.warning;
  }
  const ReducedSystem r = reduce(t, v);
  ctx.diagnostics["q"] = r.states();
  ctx.diagnostics["galerkin_defect"] = r.galerkin_defect;
  ctx.diagnostics["terms"] = term_report(r);
  io::write_factored_system(ctx.out, r, &r.V);
}

struct SimulateArgs {
  std::string system;
  SimArgs sim;
  bool lift = false;
};

void simulate_cmd(const SimulateArgs& a, Context& ctx) {
  LoadedSystem loaded = load_system(a.system);
  const Dynamics& dyn = *loaded.dyn;
  const Trajectory tr = simulate(dyn, parse_input(a.sim.input, dyn.inputs()), parse_state(a.sim.x0, dyn.states()),
                                 a.sim.options());
  ctx.diagnostics["states"] = dyn.states();
  ctx.diagnostics["samples"] = tr.t.size();
  ctx.diagnostics["final_state_norm"] = tr.x.col(tr.x.cols() - 1).norm();
  write_trajectory(ctx.out / "trajectory.csv", tr, loaded.basis ? "xhat_" : "x_");
  if (a.lift) {
    if (!loaded.basis) throw ValidationError("--lift needs a reduced system");
    Trajectory full{tr.t, *loaded.basis * tr.x};
    write_trajectory(ctx.out / "lifted.csv", full, "x_");
  }
}

struct BenchArgs {
  std::vector<Index> qs{5, 10, 20};
  Index r = 4;
  Index m = 1;
};

void bench_cmd(const BenchArgs& a, Context& ctx) {
  const std::vector<BenchRow> rows = complexity_bench(a.qs, a.r, a.m, ctx.common.seed);
  std::vector<std::vector<double>> csv;
  std::vector<double> q, fr, fj, sr, dr, dj;
  for (const BenchRow& b : rows) {
    csv.push_back({static_cast<double>(b.q), static_cast<double>(b.r), static_cast<double>(b.factored.rhs_nonlinear),
                   static_cast<double>(b.factored.jacobian_nonlinear), static_cast<double>(b.factored.storage_nonlinear),
                   static_cast<double>(b.symmetric.rhs_nonlinear), static_cast<double>(b.symmetric.jacobian_nonlinear),
                   static_cast<double>(b.symmetric.storage_nonlinear), static_cast<double>(b.dense.rhs_nonlinear),
                   static_cast<double>(b.dense.jacobian_nonlinear), static_cast<double>(b.dense.storage_nonlinear)});
    q.push_back(static_cast<double>(b.q));
    fr.push_back(static_cast<double>(b.factored.rhs_nonlinear));
    fj.push_back(static_cast<double>(b.factored.jacobian_nonlinear));
    sr.push_back(static_cast<double>(b.symmetric.rhs_nonlinear));
    dr.push_back(static_cast<double>(b.dense.rhs_nonlinear));
    dj.push_back(static_cast<double>(b.dense.jacobian_nonlinear));
  }
  io::write_csv(ctx.out / "complexity.csv",
                {"q", "r", "factored_rhs", "factored_jacobian", "factored_storage", "symmetric_rhs",
                 "symmetric_jacobian", "symmetric_storage", "dense_rhs", "dense_jacobian", "dense_storage"},
                csv);
  if (rows.size() >= 2) {
    ctx.diagnostics["slope_factored_rhs"] = loglog_slope(q, fr);
    ctx.diagnostics["slope_factored_jacobian"] = loglog_slope(q, fj);
    ctx.diagnostics["slope_symmetric_rhs"] = loglog_slope(q, sr);
    ctx.diagnostics["slope_dense_rhs"] = loglog_slope(q, dr);
    ctx.diagnostics["slope_dense_jacobian"] = loglog_slope(q, dj);
  }
}

}  // namespace

void register_mor(CLI::App& app, Registry& reg) {
  CLI::App* mor = app.add_subcommand("mor", "Tensor-projected model order reduction");
  mor->require_subcommand(1);

  auto t = std::make_shared<TensorizeArgs>();
  CLI::App* ts = mor->add_subcommand("tensorize", "CP-factor the B, C, D blocks of a polynomial system");
  ts->add_option("--system", t->system, "Directory with system.json")->required();
  add_tensorize_options(ts, *t);
  add_common(ts, reg);
  bind(ts, reg, "mor tensorize", [t](Context& ctx) { tensorize_cmd(*t, ctx); });

  auto r = std::make_shared<ReduceArgs>();
  CLI::App* rs = mor->add_subcommand("reduce", "Galerkin-project a system onto a POD or given basis");
  rs->add_option("--system", r->tens.system, "Polynomial or tensorized system directory")->required();
  rs->add_option("--basis", r->basis, "Orthonormal basis V (.ten)");
  rs->add_option("--q", r->q, "POD basis size");
  add_tensorize_options(rs, r->tens);
  add_sim_options(rs, r->train);
  add_common(rs, reg);
  bind(rs, reg, "mor reduce", [r](Context& ctx) { reduce_cmd(*r, ctx); });

  auto s = std::make_shared<SimulateArgs>();
  CLI::App* ss = mor->add_subcommand("simulate", "Integrate a full, tensorized or reduced system");
  ss->add_option("--system", s->system, "System directory")->required();
  add_sim_options(ss, s->sim);
  ss->add_flag("--lift", s->lift, "Also write V xhat for a reduced system");
  add_common(ss, reg);
  bind(ss, reg, "mor simulate", [s](Context& ctx) { simulate_cmd(*s, ctx); });

  auto b = std::make_shared<BenchArgs>();
  CLI::App* bs = mor->add_subcommand("bench", "Operation counts of factored and dense reduced models");
  bs->add_option("--q", b->qs, "Reduced sizes")->delimiter(',')->capture_default_str();
  bs->add_option("--r", b->r, "CP rank")->capture_default_str();
  bs->add_option("--m", b->m, "Inputs")->capture_default_str();
  add_common(bs, reg);
  bind(bs, reg, "mor bench", [b](Context& ctx) { bench_cmd(*b, ctx); });
}

}  // namespace tenkit::cli
