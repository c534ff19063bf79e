// Symmetric and partially symmetric CP fits.
//
// Tied factors make the per-mode least-squares problems nonlinear, so these
// use a damped Gauss-Newton (Levenberg-Marquardt) iteration on the weights and
// the distinct factor matrices, with columns renormalized after every
// accepted step.

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "tenkit/decomp.hpp"
#include "tenkit/linalg.hpp"
#include "tenkit/random.hpp"

namespace tenkit {

namespace {

constexpr double kSymmetryTol = 1e-10;

struct GroupedModel {
  std::vector<int> group_of_mode;  // d entries
  Vector weights;
  std::vector<Matrix> groups;  // distinct factors, unit columns

  Index rank() const { return weights.size(); }

  CPModel to_cp(const Shape& shape) const {
    CPModel m;
    m.shape = shape;
    m.weights = weights;
    for (int g : group_of_mode) m.factors.push_back(groups[g]);
    return m;
  }
};


/// Residual (model - data) and its Jacobian with respect to [weights, vec(group factors)...].
void residual_and_jacobian(const DenseTensor& a, const GroupedModel& m, Vector& res, Matrix* jac) {
  const int d = a.order();
  const Index r = m.rank();
  const Index n_total = a.size();
  std::vector<Index> offsets;
  Index off = r;
  for (const auto& f : m.groups) {
    offsets.push_back(off);
    off += f.size();
  }
  res.resize(n_total);
  if (jac) jac->setZero(n_total, off);
  std::vector<Index> idx(static_cast<std::size_t>(d), 0);
  std::vector<double> vals(static_cast<std::size_t>(d)), prefix(static_cast<std::size_t>(d + 1)),
      suffix(static_cast<std::size_t>(d + 1));
  for (Index e = 0; e < n_total; ++e) {
    double model = 0.0;
    for (Index i = 0; i < r; ++i) {
      for (int k = 0; k < d; ++k) vals[k] = m.groups[m.group_of_mode[k]](idx[k], i);
      prefix[0] = 1.0;
      for (int k = 0; k < d; ++k) prefix[k + 1] = prefix[k] * vals[k];
      suffix[d] = 1.0;
      for (int k = d - 1; k >= 0; --k) suffix[k] = suffix[k + 1] * vals[k];
      model += m.weights[i] * prefix[d];
      if (jac) {
        (*jac)(e, i) = prefix[d];
        for (int k = 0; k < d; ++k) {
          const int g = m.group_of_mode[k];
          const Index col = offsets[g] + i * m.groups[g].rows() + idx[k];
          (*jac)(e, col) += m.weights[i] * prefix[k] * suffix[k + 1];
        }
      }
    }
    res[e] = model - a[e];
    for (int k = 0; k < d; ++k) {
      if (++idx[k] < a.shape().dims()[k]) break;
      idx[k] = 0;
    }
  }
}

GroupedModel apply_step(const GroupedModel& m, const Vector& step) {
  GroupedModel out = m;
  const Index r = m.rank();
  out.weights += step.head(r);
  Index off = r;
  for (auto& f : out.groups) {
    f += Eigen::Map<const Matrix>(step.data() + off, f.rows(), f.cols());
    off += f.size();
  }
  return out;
}

void renormalize(GroupedModel& m) {
  std::vector<int> multiplicity(m.groups.size(), 0);
  for (int g : m.group_of_mode) ++multiplicity[g];
  for (std::size_t g = 0; g < m.groups.size(); ++g) {
    Vector norms = linalg::normalize_columns(m.groups[g]);
    for (Index i = 0; i < m.rank(); ++i) m.weights[i] *= std::pow(norms[i], multiplicity[g]);
  }
}

struct LmRun {
  GroupedModel model;
  CpdReport report;
};

LmRun levenberg_marquardt(const DenseTensor& a, GroupedModel m, const CpdConfig& cfg) {
  const double norm_a = frobenius_norm(a);
  LmRun run;
  Vector res;
  Matrix jac;
  residual_and_jacobian(a, m, res, &jac);
  double cost = res.squaredNorm();
  double mu = 1e-3;
  double prev_rel = std::sqrt(cost) / norm_a;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const Matrix h = jac.transpose() * jac;
    const Vector g = jac.transpose() * res;
    const double diag_floor = 1e-12 * std::max(h.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      Matrix damped = h;
      for (Index i = 0; i < h.rows(); ++i) damped(i, i) += mu * std::max(h(i, i), diag_floor);
      const Vector step = -damped.ldlt().solve(g);
      if (!step.allFinite()) {
        mu *= 4.0;
        continue;
      }
      GroupedModel trial = apply_step(m, step);
      renormalize(trial);
      Vector trial_res;
      residual_and_jacobian(a, trial, trial_res, nullptr);
      const double trial_cost = trial_res.squaredNorm();
      if (trial_cost <= cost) {
        m = std::move(trial);
        cost = trial_cost;
        mu = std::max(mu / 3.0, 1e-15);
        accepted = true;
      } else {
        mu *= 4.0;
      }
    }
    const double rel = std::sqrt(cost) / norm_a;
    run.report.history.push_back(rel);
    run.report.iterations = it;
    run.report.rel_residual = rel;
    if (!accepted || rel < 1e-15 || std::abs(prev_rel - rel) < cfg.tol) {
      run.report.converged = accepted || rel < 1e-12;
      break;
    }
    prev_rel = rel;
    residual_and_jacobian(a, m, res, &jac);
  }
  if (run.report.history.empty()) run.report.rel_residual = std::sqrt(cost) / norm_a;
  run.model = std::move(m);
  return run;
}

Matrix leading_or_random(const DenseTensor& a, int mode, Index r, Rng& rng, bool random) {
  const Index n = a.shape().extent(mode);
  Matrix f(n, r);
  Index filled = 0;
  if (!random) {
    linalg::Svd svd = linalg::thin_svd(matricize(a, mode));
    filled = std::min<Index>(r, svd.u.cols());
    f.leftCols(filled) = svd.u.leftCols(filled);
  }
  for (Index j = filled; j < r; ++j) f.col(j) = rng.normal_vector(n).normalized();
  return f;
}

LmRun fit_grouped(const DenseTensor& a, Index rank, const std::vector<int>& group_of_mode, const CpdConfig& cfg) {
  if (rank < 1) throw ValidationError("CP rank must be at least 1");
  const int n_groups = *std::max_element(group_of_mode.begin(), group_of_mode.end()) + 1;
  Rng rng(cfg.seed);
  std::optional<LmRun> best;
  for (int attempt = 0; attempt < std::max(1, cfg.restarts); ++attempt) {
    GroupedModel m;
    m.group_of_mode = group_of_mode;
    for (int g = 0; g < n_groups; ++g) {
      const int mode = static_cast<int>(std::find(group_of_mode.begin(), group_of_mode.end(), g) -
                                        group_of_mode.begin()) + 1;
      m.groups.push_back(leading_or_random(a, mode, rank, rng, attempt > 0));
    }
    m.weights.resize(rank);
    const CPModel cp = m.to_cp(a.shape());
    for (Index i = 0; i < rank; ++i) {
      Rank1Tensor t = cp.term(i);
      t.weight = 1.0;
      m.weights[i] = inner(a, t);
    }
    LmRun run = levenberg_marquardt(a, std::move(m), cfg);
    if (!best || run.report.rel_residual < best->report.rel_residual) best = std::move(run);
    if (best->report.rel_residual < 1e-12) break;
  }
  return std::move(*best);
}

void require_cubical(const DenseTensor& a, int first_mode) {
  const auto& dims = a.shape().dims();
  for (int k = first_mode; k < a.order(); ++k) {
    if (dims[k] != dims[first_mode - 1]) throw ValidationError("symmetric modes must have equal extents");
  }
}

}  // namespace

double symmetry_defect(const DenseTensor& a, int first_mode) {
  detail::check_mode(a.shape(), first_mode);
  require_cubical(a, first_mode);
  double worst = 0.0;
  for (Index e = 0; e < a.size(); ++e) {
    MultiIndex idx = multi_index(a.shape(), e);
    for (int k = first_mode - 1; k + 1 < a.order(); ++k) {
      MultiIndex swapped = idx;
      std::swap(swapped[k], swapped[k + 1]);
      worst = std::max(worst, std::abs(a[e] - a(swapped)));
    }
  }
  return worst;
}

double symmetry_defect(const DenseTensor& a) { return symmetry_defect(a, 1); }

CPModel SymmetricCPModel::to_cp() const {
  CPModel m;
  m.weights = lambda;
  std::vector<Index> dims(static_cast<std::size_t>(order), vectors.rows());
  m.shape = Shape(std::move(dims));
  m.factors.assign(static_cast<std::size_t>(order), vectors);
  return m;
}

CPModel PartialSymmetricCPModel::to_cp() const {
  CPModel m;
  m.weights = weights;
  std::vector<Index> dims{lead.rows()};
  for (int k = 1; k < order; ++k) dims.push_back(shared.rows());
  m.shape = Shape(std::move(dims));
  m.factors.push_back(lead);
  for (int k = 1; k < order; ++k) m.factors.push_back(shared);
  return m;
}

DenseTensor densify(const SymmetricCPModel& m) { return densify(m.to_cp()); }

SymmetricCpdResult cpd_symmetric(const DenseTensor& a, Index rank, const CpdConfig& cfg) {
  if (!a.shape().is_cubical()) throw ValidationError("symmetric CPD needs a cubical tensor");
  const double defect = symmetry_defect(a);
  if (defect > kSymmetryTol) {
    throw ValidationError("tensor is not symmetric (max permuted-entry difference " + std::to_string(defect) + ")");
  }
  SymmetricCpdResult out;
  out.model.order = a.order();
  if (frobenius_norm(a) == 0.0) {
    out.model.lambda = Vector::Zero(1);
    out.model.vectors = Matrix::Zero(a.shape().dims()[0], 1);
    out.model.vectors(0, 0) = 1.0;
    out.report.converged = true;
    return out;
  }
  LmRun run = fit_grouped(a, rank, std::vector<int>(static_cast<std::size_t>(a.order()), 0), cfg);
  out.report = std::move(run.report);
  Vector lambda = run.model.weights;
  Matrix v = run.model.groups[0];
  const bool odd = a.order() % 2 == 1;
  for (Index i = 0; i < lambda.size(); ++i) {
    if (odd) {
      if (lambda[i] < 0) {
        lambda[i] = -lambda[i];
        v.col(i) *= -1.0;
      }
    } else {
      Index imax = 0;
      v.col(i).cwiseAbs().maxCoeff(&imax);
      if (v(imax, i) < 0) v.col(i) *= -1.0;
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(lambda.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return std::abs(lambda[x]) > std::abs(lambda[y]); });
  out.model.lambda.resize(lambda.size());
  out.model.vectors.resize(v.rows(), v.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    out.model.lambda[static_cast<Index>(j)] = lambda[order[j]];
    out.model.vectors.col(static_cast<Index>(j)) = v.col(order[j]);
  }
  return out;
}

PartialSymmetricCpdResult cpd_partial_symmetric(const DenseTensor& a, Index rank, const CpdConfig& cfg) {
  if (a.order() < 2) throw ValidationError("partial symmetry needs order >= 2");
  const double defect = a.order() > 2 ? symmetry_defect(a, 2) : 0.0;
  if (defect > kSymmetryTol) {
    throw ValidationError("tensor is not symmetric in modes 2..d (defect " + std::to_string(defect) + ")");
  }
  PartialSymmetricCpdResult out;
  out.model.order = a.order();
  if (frobenius_norm(a) == 0.0) {
    out.model.weights = Vector::Zero(1);
    out.model.lead = Matrix::Zero(a.shape().dims()[0], 1);
    out.model.lead(0, 0) = 1.0;
    out.model.shared = Matrix::Zero(a.shape().dims()[1], 1);
    out.model.shared(0, 0) = 1.0;
    out.report.converged = true;
    return out;
  }
  std::vector<int> groups(static_cast<std::size_t>(a.order()), 1);
  groups[0] = 0;
  LmRun run = fit_grouped(a, rank, groups, cfg);
  out.report = std::move(run.report);
  Vector w = run.model.weights;
  Matrix lead = run.model.groups[0];
  Matrix shared = run.model.groups[1];
  const bool odd_shared = (a.order() - 1) % 2 == 1;
  for (Index i = 0; i < w.size(); ++i) {
    Index imax = 0;
    shared.col(i).cwiseAbs().maxCoeff(&imax);
    if (shared(imax, i) < 0) {
      shared.col(i) *= -1.0;
      if (odd_shared) lead.col(i) *= -1.0;
    }
    if (w[i] < 0) {
      w[i] = -w[i];
      lead.col(i) *= -1.0;
    }
  }
  std::vector<Index> order(static_cast<std::size_t>(w.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return w[x] > w[y]; });
  out.model.weights.resize(w.size());
  out.model.lead.resize(lead.rows(), lead.cols());
  out.model.shared.resize(shared.rows(), shared.cols());
  for (std::size_t j = 0; j < order.size(); ++j) {
    const auto jj = static_cast<Index>(j);
    out.model.weights[jj] = w[order[j]];
    out.model.lead.col(jj) = lead.col(order[j]);
    out.model.shared.col(jj) = shared.col(order[j]);
  }
  return out;
}

}  // namespace tenkit
