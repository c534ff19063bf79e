#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "tenkit/decomp.hpp"
#include "tenkit/linalg.hpp"
#include "tenkit/random.hpp"

namespace tenkit {

double CPModel::entry(const MultiIndex& idx) const {
  double total = 0.0;
  for (Index i = 0; i < rank(); ++i) {
    double p = weights[i];
    for (std::size_t k = 0; k < factors.size(); ++k) p *= factors[k](idx[k] - 1, i);
    total += p;
  }
  return total;
}

Rank1Tensor CPModel::term(Index i) const {
  Rank1Tensor t;
  t.weight = weights[i];
  for (const auto& f : factors) t.vectors.push_back(f.col(i));
  return t;
}

CPModel CPModel::zero(const Shape& shape) {
  CPModel m;
  m.shape = shape;
  m.weights = Vector::Zero(1);
  for (Index n : shape.dims()) {
    Matrix f = Matrix::Zero(n, 1);
    f(0, 0) = 1.0;
    m.factors.push_back(std::move(f));
  }
  return m;
}

void canonicalize(CPModel& m) {
  const int d = m.order();
  for (int k = 0; k < d; ++k) {
    Vector norms = linalg::normalize_columns(m.factors[k]);
    m.weights = m.weights.cwiseProduct(norms);
  }
  for (Index i = 0; i < m.rank(); ++i) {
    if (m.weights[i] < 0) {
      m.weights[i] = -m.weights[i];
      m.factors[0].col(i) *= -1.0;
    }
    for (int k = 0; k + 1 < d; ++k) {
      Index imax = 0;
      m.factors[k].col(i).cwiseAbs().maxCoeff(&imax);
      if (m.factors[k](imax, i) < 0) {
        m.factors[k].col(i) *= -1.0;
        m.factors[d - 1].col(i) *= -1.0;
      }
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(m.rank()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return m.weights[a] > m.weights[b]; });
  Vector w(m.rank());
  std::vector<Matrix> f = m.factors;
  for (std::size_t j = 0; j < order.size(); ++j) {
    w[static_cast<Index>(j)] = m.weights[order[j]];
    for (int k = 0; k < d; ++k) f[k].col(static_cast<Index>(j)) = m.factors[k].col(order[j]);
  }
  m.weights = std::move(w);
  m.factors = std::move(f);
}

DenseTensor densify(const CPModel& m) {
  if (m.factors.empty()) throw DimensionError("CP model without factors");
  // A_(1) = U1 diag(w) KR(U2..Ud)^T
  if (m.order() == 1) return DenseTensor(m.shape, m.factors[0] * m.weights);
  std::vector<const Matrix*> rest;
  for (int k = 1; k < m.order(); ++k) rest.push_back(&m.factors[k]);
  const Matrix kr = linalg::khatri_rao_fastest_first(rest);
  const Matrix unfolded = (m.factors[0] * m.weights.asDiagonal()) * kr.transpose();
  return DenseTensor(m.shape, Eigen::Map<const Vector>(unfolded.data(), unfolded.size()));
}

namespace {

Matrix hadamard_gram(const std::vector<Matrix>& factors, int skip) {
  const Index r = factors.front().cols();
  Matrix g = Matrix::Ones(r, r);
  for (int k = 0; k < static_cast<int>(factors.size()); ++k) {
    if (k == skip) continue;
    g = g.cwiseProduct(factors[k].transpose() * factors[k]);
  }
  return g;
}

/// Solves U G = M for U with a symmetric PSD Gram G, regularizing near-singular G.
Matrix solve_gram(const Matrix& m, const Matrix& g, bool& regularized) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  const Vector& lam = eig.eigenvalues();
  const double lmax = std::max(lam.maxCoeff(), 0.0);
  if (lmax <= 0) {
    regularized = true;
    return Matrix::Zero(m.rows(), m.cols());
  }
  double mu = 0.0;
  if (lam.minCoeff() <= 1e-10 * lmax) {
    mu = 1e-12 * lmax;
    regularized = true;
  }
  const Matrix& q = eig.eigenvectors();
  Vector inv(lam.size());
  for (Index i = 0; i < lam.size(); ++i) {
    const double denom = std::max(lam[i], 0.0) + mu;
    inv[i] = denom > 0 ? 1.0 / denom : 0.0;
  }
  return ((m * q) * inv.asDiagonal()) * q.transpose();
}

struct AlsRun {
  CPModel model;
  CpdReport report;
};

AlsRun run_als(const DenseTensor& a, const std::vector<Matrix>& unfoldings, std::vector<Matrix> factors,
               const CpdConfig& cfg, double norm_a) {
  const int d = a.order();
  const Index r = factors.front().cols();
  AlsRun run;
  run.model.shape = a.shape();
  Vector weights = Vector::Ones(r);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= cfg.max_iters; ++it) {
    for (int k = 0; k < d; ++k) {
      std::vector<const Matrix*> others;
      for (int j = 0; j < d; ++j)
        if (j != k) others.push_back(&factors[j]);
      Matrix mttkrp;
      if (others.empty()) {
        mttkrp = unfoldings[k];  // order 1: least squares against a single column
        mttkrp = mttkrp.replicate(1, r);
      } else {
        mttkrp = unfoldings[k] * linalg::khatri_rao_fastest_first(others);
      }
      const Matrix g = others.empty() ? Matrix::Ones(r, r) : hadamard_gram(factors, k);
      factors[k] = solve_gram(mttkrp, g, run.report.regularized);
      weights = linalg::normalize_columns(factors[k]);
    }
    run.model.weights = weights;
    run.model.factors = factors;
    const double res = (a.data() - densify(run.model).data()).norm() / norm_a;
    if (!std::isfinite(res)) throw NumericalError("CP-ALS produced non-finite values at sweep " + std::to_string(it));
    run.report.history.push_back(res);
    run.report.iterations = it;
    run.report.rel_residual = res;
    if (res < 1e-15 || std::abs(prev - res) < cfg.tol) {
      run.report.converged = true;
      break;
    }
    prev = res;
  }
  return run;
}

std::vector<Matrix> initial_factors(const DenseTensor& a, const std::vector<Matrix>& unfoldings, Index r,
                                    bool use_hosvd, Rng& rng) {
  std::vector<Matrix> factors;
  for (int k = 0; k < a.order(); ++k) {
    const Index n = a.shape().dims()[k];
    if (use_hosvd) {
      linalg::Svd svd = linalg::thin_svd(unfoldings[k]);
      Matrix f = Matrix::Zero(n, r);
      const Index avail = std::min<Index>(r, svd.u.cols());
      f.leftCols(avail) = svd.u.leftCols(avail);
      for (Index j = avail; j < r; ++j) f.col(j) = rng.normal_vector(n).normalized();
      factors.push_back(std::move(f));
    } else {
      Matrix f = rng.normal_matrix(n, r);
      linalg::normalize_columns(f);
      factors.push_back(std::move(f));
    }
  }
  return factors;
}

}  // namespace

CpdResult cpd_als(const DenseTensor& a, Index rank, const CpdConfig& cfg) {
  if (rank < 1) throw ValidationError("CP rank must be at least 1");
  if (cfg.restarts < 1 || cfg.max_iters < 1) throw ValidationError("CP-ALS needs restarts >= 1 and max_iters >= 1");
  const double norm_a = frobenius_norm(a);
  CpdResult out;
  if (norm_a == 0.0) {
    out.model = CPModel::zero(a.shape());
    out.report.converged = true;
    out.report.history = {0.0};
    return out;
  }
  std::vector<Matrix> unfoldings;
  for (int k = 1; k <= a.order(); ++k) unfoldings.push_back(matricize(a, k));
  const Index min_mode = *std::min_element(a.shape().dims().begin(), a.shape().dims().end());

  Rng rng(cfg.seed);
  std::optional<AlsRun> best;
  for (int attempt = 0; attempt < cfg.restarts; ++attempt) {
    const bool use_hosvd = attempt == 0 && rank <= min_mode;
    AlsRun run = run_als(a, unfoldings, initial_factors(a, unfoldings, rank, use_hosvd, rng), cfg, norm_a);
    if (!best || run.report.rel_residual < best->report.rel_residual) best = std::move(run);
    if (best->report.rel_residual < 1e-14) break;
  }
  out.model = std::move(best->model);
  out.report = std::move(best->report);
  canonicalize(out.model);
  return out;
}

IncrementalCpdResult cpd_fit_incremental(const DenseTensor& a, double target_rel_err, Index r_max,
                                         const CpdConfig& cfg) {
  if (!(target_rel_err > 0.0 && target_rel_err < 1.0)) throw ValidationError("target relative error must lie in (0,1)");
  if (r_max < 1) throw ValidationError("r_max must be at least 1");
  IncrementalCpdResult out;
  for (Index r = 1; r <= r_max; ++r) {
    CpdResult fit = cpd_als(a, r, cfg);
    const bool better = out.rank == 0 || fit.report.rel_residual < out.report.rel_residual;
    if (better) {
      out.model = std::move(fit.model);
      out.report = std::move(fit.report);
      out.rank = r;
    }
    if (out.report.rel_residual <= target_rel_err) {
      out.target_met = true;
      break;
    }
  }
  return out;
}

std::int64_t parameter_count(const CPModel& m) {
  std::int64_t total = 0;
  for (const auto& f : m.factors) total += static_cast<std::int64_t>(f.rows()) * f.cols();
  return total;
}

double factored_inner_rank1(const CPModel& m, const Rank1Tensor& w, OpCounter* ops) {
  if (!(m.shape == w.shape())) throw DimensionError("factored inner product: shape mismatch");
  Vector prod = m.weights;
  for (int k = 0; k < m.order(); ++k) {
    prod = prod.cwiseProduct(m.factors[k].transpose() * w.vectors[k]);
    count(ops, m.factors[k].size() + m.rank());
  }
  count(ops, m.rank());
  return w.weight * prod.sum();
}

}  // namespace tenkit
