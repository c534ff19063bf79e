#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "tenkit/error.hpp"
#include "tenkit/parallel.hpp"
#include "tenkit/random.hpp"
#include "tenkit/uq.hpp"

namespace tenkit {

ParamSpec ParamSpec::uniform_sizes(std::vector<Measure> measures, Index n) {
  ParamSpec s;
  s.sizes.assign(measures.size(), n);
  s.measures = std::move(measures);
  return s;
}

QuadratureGrid::QuadratureGrid(std::vector<GaussRule> rules) : rules_(std::move(rules)) {
  if (rules_.empty()) throw ValidationError("quadrature grid needs at least one dimension");
}

Shape QuadratureGrid::shape() const {
  std::vector<Index> dims;
  for (const auto& r : rules_) dims.push_back(r.nodes.size());
  return Shape(std::move(dims));
}

Vector QuadratureGrid::point(const MultiIndex& idx) const {
  Vector xi(dims());
  for (int k = 0; k < dims(); ++k) xi[k] = rules_[static_cast<std::size_t>(k)].nodes[idx[k] - 1];
  return xi;
}

Rank1Tensor QuadratureGrid::weight_tensor() const {
  Rank1Tensor w;
  for (const auto& r : rules_) w.vectors.push_back(r.weights);
  return w;
}

namespace {

void check_spec(const ParamSpec& spec) {
  if (spec.measures.empty()) throw ValidationError("parameter spec needs at least one dimension");
  if (spec.sizes.size() != spec.measures.size()) throw ValidationError("parameter spec needs one quadrature size per dimension");
  for (Index n : spec.sizes)
    if (n < 1) throw ValidationError("quadrature sizes must be positive");
}

/// Describes prod n_k, e.g. "3^57 = 1.6e+27".
std::string grid_count(const ParamSpec& spec, double& total) {
  total = 1.0;
  for (Index n : spec.sizes) total *= static_cast<double>(n);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1e", total);
  const bool uniform = std::all_of(spec.sizes.begin(), spec.sizes.end(), [&](Index n) { return n == spec.sizes[0]; });
  if (uniform && spec.sizes.size() > 1) {
    return std::to_string(spec.sizes[0]) + "^" + std::to_string(spec.sizes.size()) + " = " + buf;
  }
  return buf;
}

/// Per-dimension tables psi_j(node_i), rows = nodes, cols = degree 0..p.
std::vector<Matrix> basis_tables(const QuadratureGrid& grid, const std::vector<Measure>& measures, int p) {
  std::vector<Matrix> out;
  for (int k = 0; k < grid.dims(); ++k) {
    const GaussRule& r = grid.rules()[static_cast<std::size_t>(k)];
    Matrix t(r.nodes.size(), p + 1);
    for (Index i = 0; i < r.nodes.size(); ++i) t.row(i) = measures[static_cast<std::size_t>(k)].orthonormal(r.nodes[i], p).transpose();
    out.push_back(std::move(t));
  }
  return out;
}

Matrix grid_points(const QuadratureGrid& grid, const std::vector<MultiIndex>& idx) {
  Matrix pts(grid.dims(), static_cast<Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) pts.col(static_cast<Index>(j)) = grid.point(idx[j]);
  return pts;
}

}  // namespace

QuadratureGrid build_quadrature(const ParamSpec& spec) {
  check_spec(spec);
  std::vector<GaussRule> rules;
  for (std::size_t k = 0; k < spec.measures.size(); ++k) rules.push_back(spec.measures[k].rule(spec.sizes[k]));
  return QuadratureGrid(std::move(rules));
}

std::vector<std::vector<int>> total_degree_set(int d, int p) {
  if (d < 1 || p < 0) throw ValidationError("total-degree set needs d >= 1 and p >= 0");
  std::vector<std::vector<int>> out;
  for (int deg = 0; deg <= p; ++deg) {
    // Compositions of deg into d parts, larger leading parts first.
    std::vector<int> a(static_cast<std::size_t>(d), 0);
    a[0] = deg;
    while (true) {
      out.push_back(a);
      // Find the rightmost non-last position with a positive entry.
      int j = d - 2;
      while (j >= 0 && a[static_cast<std::size_t>(j)] == 0) --j;
      if (j < 0) break;
      a[static_cast<std::size_t>(j)] -= 1;
      const int rest = a[static_cast<std::size_t>(d - 1)] + 1;
      a[static_cast<std::size_t>(d - 1)] = 0;
      a[static_cast<std::size_t>(j + 1)] = rest;
    }
  }
  return out;
}

Rank1Tensor weight_tensor(const QuadratureGrid& grid, const std::vector<Measure>& measures, const std::vector<int>& alpha) {
  if (static_cast<int>(alpha.size()) != grid.dims() || static_cast<int>(measures.size()) != grid.dims()) {
    throw DimensionError("weight tensor: multi-index, measures and grid differ in dimension");
  }
  Rank1Tensor w;
  for (int k = 0; k < grid.dims(); ++k) {
    const GaussRule& r = grid.rules()[static_cast<std::size_t>(k)];
    const int deg = alpha[static_cast<std::size_t>(k)];
    Vector v(r.nodes.size());
    for (Index i = 0; i < v.size(); ++i) v[i] = r.weights[i] * measures[static_cast<std::size_t>(k)].orthonormal(r.nodes[i], deg)[deg];
    w.vectors.push_back(std::move(v));
  }
  return w;
}

GpcExpansion make_expansion(std::vector<Measure> measures, int order) {
  GpcExpansion e;
  e.multi_indices = total_degree_set(static_cast<int>(measures.size()), order);
  e.measures = std::move(measures);
  e.order = order;
  e.coefficients = Vector::Zero(static_cast<Index>(e.multi_indices.size()));
  return e;
}

double gpc_eval(const GpcExpansion& exp, const Vector& xi) {
  if (xi.size() != exp.dims()) throw DimensionError("gPC evaluation point has wrong dimension");
  std::vector<Vector> psi;
  for (int k = 0; k < exp.dims(); ++k) psi.push_back(exp.measures[static_cast<std::size_t>(k)].orthonormal(xi[k], exp.order));
  double total = 0.0;
  for (std::size_t j = 0; j < exp.multi_indices.size(); ++j) {
    double term = exp.coefficients[static_cast<Index>(j)];
    for (int k = 0; k < exp.dims(); ++k) term *= psi[static_cast<std::size_t>(k)][exp.multi_indices[j][static_cast<std::size_t>(k)]];
    total += term;
  }
  return total;
}

Moments gpc_moments(const GpcExpansion& exp) {
  Moments m;
  for (std::size_t j = 0; j < exp.multi_indices.size(); ++j) {
    const double c = exp.coefficients[static_cast<Index>(j)];
    const bool constant = std::all_of(exp.multi_indices[j].begin(), exp.multi_indices[j].end(), [](int a) { return a == 0; });
    if (constant) {
      m.mean += c;
    } else {
      m.variance += c * c;
    }
  }
  return m;
}

Vector gpc_sample(const GpcExpansion& exp, Index count, std::uint64_t seed) {
  Rng rng(seed);
  Vector out(count);
  Vector xi(exp.dims());
  for (Index s = 0; s < count; ++s) {
    for (int k = 0; k < exp.dims(); ++k) {
      switch (exp.measures[static_cast<std::size_t>(k)].kind()) {
        case Measure::Kind::gaussian:
          xi[k] = rng.normal();
          break;
        case Measure::Kind::uniform:
          xi[k] = rng.uniform(-1.0, 1.0);
          break;
        case Measure::Kind::custom:
          throw ValidationError("sampling is only available for gaussian and uniform parameters");
      }
    }
    out[s] = gpc_eval(exp, xi);
  }
  return out;
}

DenseTensor gpc_on_grid(const GpcExpansion& exp, const QuadratureGrid& grid) {
  if (exp.dims() != grid.dims()) throw DimensionError("expansion and grid differ in dimension");
  const std::vector<Matrix> tables = basis_tables(grid, exp.measures, exp.order);
  const Shape shape = grid.shape();
  Vector acc = Vector::Zero(shape.numel());
  for (std::size_t j = 0; j < exp.multi_indices.size(); ++j) {
    const double c = exp.coefficients[static_cast<Index>(j)];
    if (c == 0.0) continue;
    Rank1Tensor t;
    t.weight = c;
    for (int k = 0; k < exp.dims(); ++k) t.vectors.push_back(tables[static_cast<std::size_t>(k)].col(exp.multi_indices[j][static_cast<std::size_t>(k)]));
    acc += densify(t).data();
  }
  return DenseTensor(shape, std::move(acc));
}

Vector SampleOracle::evaluate_batch(const Matrix& points, int threads) const {
  Vector out(points.cols());
  const int workers = concurrent_safe() ? threads : 1;
  parallel_for(static_cast<long>(points.cols()), workers, [&](long j) {
    const double y = evaluate(points.col(j));
    if (!std::isfinite(y)) throw NumericalError("oracle returned a non-finite value at sample " + std::to_string(j));
    out[j] = y;
  });
  return out;
}

GpcExpansion collocate_full(const SampleOracle& oracle, const ParamSpec& spec, int order, const CollocationOptions& opts) {
  check_spec(spec);
  double total = 0.0;
  const std::string count = grid_count(spec, total);
  if (total > kFullGridBudget) {
    throw ScaleError("full tensor-product collocation needs " + count + " total samples, above the budget of 1e+06");
  }
  const QuadratureGrid grid = build_quadrature(spec);
  const Shape shape = grid.shape();
  std::vector<MultiIndex> all;
  for (Index e = 0; e < shape.numel(); ++e) all.push_back(multi_index(shape, e));
  const DenseTensor y(shape, oracle.evaluate_batch(grid_points(grid, all), opts.threads));
  GpcExpansion exp = make_expansion(spec.measures, order);
  for (std::size_t j = 0; j < exp.multi_indices.size(); ++j) {
    exp.coefficients[static_cast<Index>(j)] = inner(y, weight_tensor(grid, spec.measures, exp.multi_indices[j]));
  }
  return exp;
}

RecoveryResult collocate_tensor_recovery(const SampleOracle& oracle, const ParamSpec& spec, int order, Index budget,
                                         const RecoveryConfig& cfg) {
  check_spec(spec);
  if (budget < 1) throw ValidationError("sample budget must be positive");
  if (cfg.holdout < 0) throw ValidationError("holdout count must be non-negative");
  double total = 0.0;
  const std::string count = grid_count(spec, total);
  if (total > 9.0e18) throw ScaleError("grid with " + count + " points cannot be indexed");
  const QuadratureGrid grid = build_quadrature(spec);
  const Shape shape = grid.shape();
  const Index numel = shape.numel();
  if (budget + cfg.holdout > numel) {
    throw ValidationError("budget plus holdout (" + std::to_string(budget + cfg.holdout) + ") exceeds the grid size " +
                          std::to_string(numel));
  }

  Rng rng(cfg.seed);
  std::vector<Index> offsets;
  const Index want = budget + cfg.holdout;
  if (numel <= 10'000'000) {
    offsets = rng.sample_without_replacement(numel, want);
  } else {
    std::unordered_set<Index> seen;
    while (static_cast<Index>(offsets.size()) < want) {
      const auto o = static_cast<Index>(rng.below(static_cast<std::uint64_t>(numel)));
      if (seen.insert(o).second) offsets.push_back(o);
    }
  }
  RecoveryResult out;
  for (Index j = 0; j < want; ++j) {
    (j < budget ? out.diagnostics.sample_indices : out.diagnostics.holdout_indices)
        .push_back(multi_index(shape, offsets[static_cast<std::size_t>(j)]));
  }
  const Vector y = oracle.evaluate_batch(grid_points(grid, out.diagnostics.sample_indices), cfg.threads);

  GpcExpansion exp = make_expansion(spec.measures, order);
  LrSparseProblem problem{SampleSet(shape, out.diagnostics.sample_indices, y), {}, cfg.lambda, cfg.rank};
  for (const auto& alpha : exp.multi_indices) problem.transforms.push_back(weight_tensor(grid, spec.measures, alpha));
  CompletionConfig ccfg = cfg.completion;
  ccfg.seed = cfg.seed;
  ccfg.threads = cfg.threads;
  LrSparseResult fit = complete_lr_sparse(problem, ccfg);
  exp.coefficients = fit.coefficients;

  out.diagnostics.objective = fit.report.objective;
  out.diagnostics.factor_change = fit.report.factor_change;
  out.diagnostics.sparsity = fit.sparsity;
  out.diagnostics.converged = fit.report.converged;
  if (cfg.holdout > 0) {
    const Vector yh = oracle.evaluate_batch(grid_points(grid, out.diagnostics.holdout_indices), cfg.threads);
    Vector pred(yh.size());
    for (Index j = 0; j < yh.size(); ++j) pred[j] = fit.model.entry(out.diagnostics.holdout_indices[static_cast<std::size_t>(j)]);
    out.diagnostics.heldout_rel_error = (pred - yh).norm() / std::max(yh.norm(), 1e-300);
  }
  out.expansion = std::move(exp);
  return out;
}

double ks_distance(Vector a, Vector b) {
  if (a.size() == 0 || b.size() == 0) throw ValidationError("KS distance needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  Index i = 0, j = 0;
  double worst = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

Histogram histogram(const Vector& samples, int bins) {
  if (bins < 1 || samples.size() == 0) throw ValidationError("histogram needs samples and at least one bin");
  double lo = samples.minCoeff(), hi = samples.maxCoeff();
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / bins;
  Histogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) h.edges[b] = lo + width * b;
  h.density = Vector::Zero(bins);
  for (double s : samples) {
    int b = static_cast<int>((s - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    h.density[b] += 1.0;
  }
  h.density /= static_cast<double>(samples.size()) * width;
  return h;
}

}  // namespace tenkit
