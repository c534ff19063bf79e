// Alternating minimization over CP factors restricted to observed entries.
// Each outer iteration updates one factor matrix at a time. Without the
// sparse-transform penalty the update splits into independent row
// least-squares problems; with it, the whole factor is solved as a
// generalized lasso by ADMM on z = T u followed by a support polish.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "tenkit/completion.hpp"
#include "tenkit/error.hpp"
#include "tenkit/linalg.hpp"
#include "tenkit/parallel.hpp"
#include "tenkit/random.hpp"

namespace tenkit {

namespace {

/// Sample positions grouped by the index they take in each mode.
struct RowMap {
  std::vector<std::vector<std::vector<Index>>> rows;  // [mode][row] -> sample positions

  explicit RowMap(const SampleSet& s) {
    const int d = s.shape().order();
    rows.resize(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) rows[k].resize(static_cast<std::size_t>(s.shape().dims()[k]));
    for (Index j = 0; j < s.size(); ++j) {
      const MultiIndex& idx = s.indices()[static_cast<std::size_t>(j)];
      for (int k = 0; k < d; ++k) rows[k][static_cast<std::size_t>(idx[k] - 1)].push_back(j);
    }
  }
};

/// Zero-based sample coordinates, stored mode-major for cache-friendly loops.
struct Coords {
  std::vector<std::vector<Index>> by_mode;

  explicit Coords(const SampleSet& s) {
    by_mode.resize(static_cast<std::size_t>(s.shape().order()));
    for (auto& v : by_mode) v.reserve(static_cast<std::size_t>(s.size()));
    for (const auto& idx : s.indices())
      for (int k = 0; k < s.shape().order(); ++k) by_mode[k].push_back(idx[k] - 1);
  }
};

/// Product over modes j != skip of F_j(row of sample, :).
void design_row(const std::vector<Matrix>& f, const Coords& c, Index sample, int skip, Eigen::Ref<Vector> out) {
  out.setOnes();
  for (int j = 0; j < static_cast<int>(f.size()); ++j) {
    if (j == skip) continue;
    out = out.cwiseProduct(f[j].row(c.by_mode[j][static_cast<std::size_t>(sample)]).transpose());
  }
}

Vector predictions(const std::vector<Matrix>& f, const Coords& c, Index n_samples) {
  const Index r = f.front().cols();
  Vector out(n_samples);
  Vector row(r);
  for (Index s = 0; s < n_samples; ++s) {
    design_row(f, c, s, -1, row);
    out[s] = row.sum();
  }
  return out;
}

/// <X, W> with X = sum_c prod_k F_k(:, c).
double factor_inner(const std::vector<Matrix>& f, const Rank1Tensor& w) {
  Vector prod = Vector::Ones(f.front().cols());
  for (std::size_t k = 0; k < f.size(); ++k) prod = prod.cwiseProduct(f[k].transpose() * w.vectors[k]);
  return w.weight * prod.sum();
}

Vector transform_coefficients(const std::vector<Matrix>& f, const std::vector<Rank1Tensor>& ws) {
  Vector z(static_cast<Index>(ws.size()));
  for (std::size_t m = 0; m < ws.size(); ++m) z[static_cast<Index>(m)] = factor_inner(f, ws[m]);
  return z;
}

/// Solves the symmetric PSD system G x = b; adds a tiny ridge only when G is near-singular.
Vector solve_psd(const Matrix& g, const Vector& b) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  const Vector& lam = eig.eigenvalues();
  const double lmax = std::max(lam.maxCoeff(), 0.0);
  if (lmax <= 0) return Vector::Zero(b.size());
  const double mu = lam.minCoeff() <= 1e-12 * lmax ? 1e-12 * lmax : 0.0;
  Vector inv(lam.size());
  for (Index i = 0; i < lam.size(); ++i) {
    const double denom = std::max(lam[i], 0.0) + mu;
    inv[i] = denom > 0 ? 1.0 / denom : 0.0;
  }
  return eig.eigenvectors() * inv.asDiagonal() * (eig.eigenvectors().transpose() * b);
}

struct Problem {
  const SampleSet& samples;
  const std::vector<Rank1Tensor>* transforms = nullptr;
  double lambda = 0.0;
};

class Solver {
public:
  Solver(const Problem& p, Index rank, const CompletionConfig& cfg)
      : p_(p), rank_(rank), cfg_(cfg), rows_(p.samples), coords_(p.samples) {}

  double objective(const std::vector<Matrix>& f) const {
    const double res = (predictions(f, coords_, p_.samples.size()) - p_.samples.values()).squaredNorm();
    double pen = 0.0;
    if (penalized()) pen = transform_coefficients(f, *p_.transforms).lpNorm<1>();
    return 0.5 * res + p_.lambda * pen;
  }

  double observed_residual(const std::vector<Matrix>& f) const {
    return (predictions(f, coords_, p_.samples.size()) - p_.samples.values()).norm();
  }

  bool penalized() const { return p_.transforms && p_.lambda > 0.0; }

  void update_mode(std::vector<Matrix>& f, int k) const {
    if (penalized()) {
      update_mode_sparse(f, k);
    } else {
      update_mode_rows(f, k);
    }
  }

private:
  void update_mode_rows(std::vector<Matrix>& f, int k) const {
    const auto& rows = rows_.rows[k];
    Matrix next = f[k];
    parallel_for(static_cast<long>(rows.size()), cfg_.threads, [&](long i) {
      const auto& list = rows[static_cast<std::size_t>(i)];
      if (list.empty()) return;
      Matrix phi(static_cast<Index>(list.size()), rank_);
      Vector y(static_cast<Index>(list.size()));
      Vector tmp(rank_);
      for (std::size_t s = 0; s < list.size(); ++s) {
        design_row(f, coords_, list[s], k, tmp);
        phi.row(static_cast<Index>(s)) = tmp.transpose();
        y[static_cast<Index>(s)] = p_.samples.values()[list[s]];
      }
      const Vector old = f[k].row(i).transpose();
      const Vector sol = solve_psd(phi.transpose() * phi, phi.transpose() * y);
      if ((phi * sol - y).squaredNorm() <= (phi * old - y).squaredNorm()) next.row(i) = sol.transpose();
    });
    f[k] = std::move(next);
  }

  /// Factor k enters linearly: predictions = Phi u and z = T u with u = vec(F_k).
  void update_mode_sparse(std::vector<Matrix>& f, int k) const {
    const Index n = f[k].rows();
    const Index nv = n * rank_;
    const auto& ws = *p_.transforms;
    const auto m = static_cast<Index>(ws.size());
    Matrix h = Matrix::Zero(nv, nv);
    Vector b = Vector::Zero(nv);
    Vector tmp(rank_);
    for (Index i = 0; i < n; ++i) {
      const auto& list = rows_.rows[k][static_cast<std::size_t>(i)];
      Matrix g = Matrix::Zero(rank_, rank_);
      Vector bi = Vector::Zero(rank_);
      for (Index s : list) {
        design_row(f, coords_, s, k, tmp);
        g.noalias() += tmp * tmp.transpose();
        bi += p_.samples.values()[s] * tmp;
      }
      for (Index c1 = 0; c1 < rank_; ++c1) {
        b[i + n * c1] = bi[c1];
        for (Index c2 = 0; c2 < rank_; ++c2) h(i + n * c1, i + n * c2) = g(c1, c2);
      }
    }
    Matrix t(m, nv);
    for (Index j = 0; j < m; ++j) {
      const Rank1Tensor& w = ws[static_cast<std::size_t>(j)];
      Vector g = Vector::Constant(rank_, w.weight);
      for (int q = 0; q < static_cast<int>(f.size()); ++q)
        if (q != k) g = g.cwiseProduct(f[q].transpose() * w.vectors[static_cast<std::size_t>(q)]);
      for (Index c = 0; c < rank_; ++c) t.row(j).segment(n * c, n) = g[c] * w.vectors[static_cast<std::size_t>(k)].transpose();
    }

    const Vector u0 = Eigen::Map<const Vector>(f[k].data(), nv);
    auto block_objective = [&](const Vector& u) {
      return 0.5 * u.dot(h * u) - b.dot(u) + p_.lambda * (t * u).lpNorm<1>();
    };
    Vector best = u0;
    double best_val = block_objective(u0);
    auto consider = [&](const Vector& u) {
      if (!u.allFinite()) return;
      const double v = block_objective(u);
      if (v < best_val) {
        best_val = v;
        best = u;
      }
    };

    const Vector u_admm = admm(h, b, t, u0);
    consider(u_admm);
    consider(polish(h, b, t, u_admm));
    f[k] = Eigen::Map<const Matrix>(best.data(), n, rank_);
  }

  Vector admm(const Matrix& h, const Vector& b, const Matrix& t, const Vector& u0) const {
    const Matrix tt = t.transpose() * t;
    const double rho = std::max(h.trace(), 1e-300) / std::max(tt.trace(), 1e-300);
    Matrix lhs = h + rho * tt;
    const double ridge = 1e-13 * std::max(lhs.diagonal().maxCoeff(), 1e-300);
    lhs.diagonal().array() += ridge;
    Eigen::LDLT<Matrix> ldlt(lhs);
    Vector u = u0;
    Vector z = t * u;
    Vector w = Vector::Zero(z.size());
    const double kappa = p_.lambda / rho;
    for (int it = 0; it < 5000; ++it) {
      u = ldlt.solve(b + ridge * u + rho * t.transpose() * (z - w));
      const Vector tu = t * u;
      const Vector z_old = z;
      z = (tu + w).unaryExpr([kappa](double v) { return std::copysign(std::max(std::abs(v) - kappa, 0.0), v); });
      w += tu - z;
      const double primal = (tu - z).norm();
      const double dual = rho * (t.transpose() * (z - z_old)).norm();
      const double scale = std::max({tu.norm(), z.norm(), 1e-300});
      if (primal <= 1e-12 * scale && dual <= 1e-12 * std::max(b.norm(), 1e-300)) break;
    }
    return u;
  }

  /// Re-solves on the support suggested by the ADMM iterate: transform rows
  /// judged zero become equality constraints, the rest carry their sign.
  Vector polish(const Matrix& h, const Vector& b, const Matrix& t, const Vector& u) const {
    const Vector z = t * u;
    const double zmax = z.cwiseAbs().maxCoeff();
    if (zmax <= 0) return u;
    const double cut = 1e-6 * zmax;
    std::vector<Index> zero, active;
    for (Index j = 0; j < z.size(); ++j) (std::abs(z[j]) <= cut ? zero : active).push_back(j);
    Vector rhs = b;
    for (Index j : active) rhs -= p_.lambda * (z[j] > 0 ? 1.0 : -1.0) * t.row(j).transpose();
    Matrix basis;
    if (zero.empty()) {
      basis = Matrix::Identity(u.size(), u.size());
    } else {
      Matrix tz(static_cast<Index>(zero.size()), t.cols());
      for (std::size_t j = 0; j < zero.size(); ++j) tz.row(static_cast<Index>(j)) = t.row(zero[j]);
      Eigen::JacobiSVD<Matrix> svd(tz, Eigen::ComputeFullV);
      const Vector& s = svd.singularValues();
      Index rank = 0;
      const double tol = 1e-10 * (s.size() ? s[0] : 0.0);
      for (Index j = 0; j < s.size(); ++j)
        if (s[j] > tol) ++rank;
      if (rank == u.size()) return Vector::Zero(u.size());
      basis = svd.matrixV().rightCols(u.size() - rank);
    }
    const Vector v = solve_psd(basis.transpose() * h * basis, basis.transpose() * rhs);
    return basis * v;
  }

  const Problem& p_;
  Index rank_;
  CompletionConfig cfg_;
  RowMap rows_;
  Coords coords_;
};

std::vector<Matrix> random_factors(const Shape& shape, Index r, double rms, std::uint64_t seed) {
  Rng rng(seed);
  const double scale = std::pow(std::max(rms, 1e-300) / static_cast<double>(r), 1.0 / shape.order());
  std::vector<Matrix> f;
  for (int k = 1; k <= shape.order(); ++k) f.push_back(scale * rng.normal_matrix(shape.extent(k), r));
  return f;
}

std::vector<Matrix> initial_factors(const SampleSet& s, Index r, std::uint64_t seed) {
  Rng rng(seed);
  const Shape& shape = s.shape();
  std::vector<Matrix> f;
  const double rms = s.values().norm() / std::sqrt(static_cast<double>(s.size()));
  const double scale = std::pow(std::max(rms, 1e-300) / static_cast<double>(r), 1.0 / shape.order());
  if (shape.numel() <= 1'000'000 && rms > 0) {
    // Leading singular vectors of the zero-filled, rescaled observations.
    Vector filled = Vector::Zero(shape.numel());
    for (Index j = 0; j < s.size(); ++j) filled[linear_index(shape, s.indices()[static_cast<std::size_t>(j)])] = s.values()[j];
    const DenseTensor z(shape, filled);
    for (int k = 1; k <= shape.order(); ++k) {
      const Index n = shape.extent(k);
      linalg::Svd svd = linalg::thin_svd(matricize(z, k));
      Matrix fk(n, r);
      const Index avail = std::min<Index>(r, svd.u.cols());
      fk.leftCols(avail) = svd.u.leftCols(avail);
      for (Index j = avail; j < r; ++j) fk.col(j) = rng.normal_vector(n).normalized();
      f.push_back(scale * std::sqrt(static_cast<double>(n)) * fk);
    }
  } else {
    f = random_factors(shape, r, rms, seed);
  }
  return f;
}

/// Equalizes column norms across modes; the represented tensor is unchanged.
void balance(std::vector<Matrix>& f) {
  const Index r = f.front().cols();
  const double d = static_cast<double>(f.size());
  for (Index c = 0; c < r; ++c) {
    double log_mean = 0.0;
    bool zero = false;
    for (const auto& m : f) {
      const double nrm = m.col(c).norm();
      if (nrm == 0.0) zero = true;
      log_mean += std::log(std::max(nrm, 1e-300));
    }
    if (zero) continue;
    const double g = std::exp(log_mean / d);
    for (auto& m : f) m.col(c) *= g / m.col(c).norm();
  }
}

double relative_change(const std::vector<Matrix>& before, const std::vector<Matrix>& after) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < before.size(); ++k) {
    num += (after[k] - before[k]).squaredNorm();
    den += before[k].squaredNorm();
  }
  return den > 0 ? std::sqrt(num / den) : 0.0;
}

CPModel to_model(const Shape& shape, std::vector<Matrix> f) {
  CPModel m;
  m.shape = shape;
  m.weights = Vector::Ones(f.front().cols());
  m.factors = std::move(f);
  canonicalize(m);
  return m;
}

struct AltOutput {
  std::vector<Matrix> factors;
  CompletionReport report;
};

AltOutput run_alternating(const Problem& p, Index rank, const CompletionConfig& cfg, std::vector<Matrix> f) {
  const Shape& shape = p.samples.shape();
  AltOutput out;
  Index dof = 0;
  for (Index n : shape.dims()) dof += n * rank;
  out.report.underdetermined = p.samples.size() < dof;

  Solver solver(p, rank, cfg);
  double obj = solver.objective(f);
  const double data_scale = 0.5 * p.samples.values().squaredNorm();
  out.report.objective.push_back(obj);
  out.report.observed_residual.push_back(solver.observed_residual(f));
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const std::vector<Matrix> before = f;
    for (int k = 0; k < shape.order(); ++k) solver.update_mode(f, k);
    balance(f);
    const double next = solver.objective(f);
    if (!std::isfinite(next)) {
      std::string trail;
      for (double v : out.report.objective) trail += " " + std::to_string(v);
      throw NumericalError("completion diverged at iteration " + std::to_string(it) + "; objective trajectory:" + trail);
    }
    out.report.objective.push_back(next);
    out.report.observed_residual.push_back(solver.observed_residual(f));
    out.report.factor_change.push_back(relative_change(before, f));
    out.report.iterations = it;
    const double change = std::abs(obj - next) / std::max(obj, 1e-300);
    obj = next;
    if (next <= 1e-30 * data_scale || change < cfg.tol) {
      out.report.converged = true;
      break;
    }
  }
  out.factors = std::move(f);
  return out;
}

/// Start 0 is the spectral initialization; the others are random. Each is run
/// without the penalty and the factors with the lowest data misfit are kept.
std::vector<Matrix> starting_factors(const SampleSet& samples, Index rank, const CompletionConfig& cfg) {
  if (rank < 1) throw ValidationError("completion rank must be at least 1");
  if (cfg.max_iters < 1) throw ValidationError("max_iters must be at least 1");
  if (cfg.restarts < 1) throw ValidationError("restarts must be at least 1");
  std::vector<Matrix> init = initial_factors(samples, rank, cfg.seed);
  if (cfg.restarts == 1) return init;
  const Problem plain{samples};
  const double rms = samples.values().norm() / std::sqrt(static_cast<double>(samples.size()));
  std::vector<Matrix> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int j = 0; j < cfg.restarts; ++j) {
    std::vector<Matrix> f = j == 0 ? init : random_factors(samples.shape(), rank, rms, cfg.seed + 0x9e3779b97f4a7c15ULL * j);
    AltOutput run = run_alternating(plain, rank, cfg, std::move(f));
    if (run.report.objective.back() < best_obj) {
      best_obj = run.report.objective.back();
      best = std::move(run.factors);
    }
  }
  return best;
}

}  // namespace

CompletionResult complete_fixed_rank(const SampleSet& samples, Index rank, const CompletionConfig& cfg) {
  Problem p{samples};
  AltOutput run = run_alternating(p, rank, cfg, starting_factors(samples, rank, cfg));
  return {to_model(samples.shape(), std::move(run.factors)), std::move(run.report)};
}

LrSparseResult complete_lr_sparse(const LrSparseProblem& problem, const CompletionConfig& cfg) {
  if (problem.lambda < 0.0 || !std::isfinite(problem.lambda)) throw ValidationError("lambda must be non-negative");
  for (const auto& w : problem.transforms) {
    if (!(w.shape() == problem.samples.shape())) throw DimensionError("transform shape differs from the sample shape");
  }
  Problem p{problem.samples, &problem.transforms, problem.lambda};
  AltOutput run = run_alternating(p, problem.rank, cfg, starting_factors(problem.samples, problem.rank, cfg));
  LrSparseResult out;
  out.model = to_model(problem.samples.shape(), std::move(run.factors));
  out.report = std::move(run.report);
  out.coefficients.resize(static_cast<Index>(problem.transforms.size()));
  for (std::size_t m = 0; m < problem.transforms.size(); ++m) {
    out.coefficients[static_cast<Index>(m)] = factored_inner_rank1(out.model, problem.transforms[m]);
  }
  if (out.coefficients.size() > 0) {
    const double zmax = out.coefficients.cwiseAbs().maxCoeff();
    for (Index m = 0; m < out.coefficients.size(); ++m)
      if (std::abs(out.coefficients[m]) > 1e-6 * zmax) ++out.sparsity;
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0 && hi >= lo) || count < 1) throw ValidationError("log grid needs 0 < lo <= hi and count >= 1");
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out.push_back(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))));
  }
  return out;
}

LambdaSelection select_lambda(const LrSparseProblem& problem, const std::vector<double>& grid,
                              double holdout_fraction, const CompletionConfig& cfg) {
  if (grid.empty()) throw ValidationError("lambda grid is empty");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw ValidationError("holdout fraction must lie in (0,1)");
  const Index n = problem.samples.size();
  const auto n_hold = static_cast<Index>(std::floor(holdout_fraction * static_cast<double>(n)));
  if (n_hold < 1 || n_hold >= n) throw ValidationError("too few samples to hold out");
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Index> perm = rng.sample_without_replacement(n, n);
  std::vector<Index> hold(perm.begin(), perm.begin() + n_hold), train(perm.begin() + n_hold, perm.end());
  std::sort(hold.begin(), hold.end());
  std::sort(train.begin(), train.end());
  const SampleSet held = problem.samples.subset(hold);
  LambdaSelection out;
  double best_rms = std::numeric_limits<double>::infinity();
  for (double lam : grid) {
    LrSparseProblem sub{problem.samples.subset(train), problem.transforms, lam, problem.rank};
    LrSparseResult fit = complete_lr_sparse(sub, cfg);
    const double rms = residual_omega(fit.model, held) / std::sqrt(static_cast<double>(held.size()));
    out.scores.push_back({lam, rms});
    if (rms < best_rms) {
      best_rms = rms;
      out.best = lam;
    }
  }
  return out;
}

}  // namespace tenkit
