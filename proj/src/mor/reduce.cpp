#include <cmath>

#include "tenkit/error.hpp"
#include "tenkit/linalg.hpp"
#include "tenkit/mor.hpp"
#include "tenkit/random.hpp"

namespace tenkit {

namespace {

void check_basis(const Matrix& v, Index n) {
  if (v.rows() != n || v.cols() < 1 || v.cols() > n) {
    throw DimensionError("projection basis is " + std::to_string(v.rows()) + "x" + std::to_string(v.cols()) +
                         " for a system with " + std::to_string(n) + " states");
  }
  const double defect = (v.transpose() * v - Matrix::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
  if (!(defect <= 1e-10)) throw ValidationError("projection basis is not orthonormal (|V^T V - I| = " + std::to_string(defect) + ")");
}

double gap(const Vector& a, const Vector& ref) {
  const double scale = ref.norm();
  return scale > 0 ? (a - ref).norm() / scale : a.norm();
}

}  // namespace

ReducedSystem reduce(const TensorizedSystem& sys, const Matrix& v) {
  const Index n = sys.states();
  check_basis(v, n);
  const Index q = v.cols();
  const Matrix vt = v.transpose();
  ReducedSystem out;
  out.V = v;
  out.A = vt * sys.A * v;
  out.E = vt * sys.E;
  out.input = sys.input;
  for (const FactoredTerm& t : sys.terms) {
    FactoredTerm p = t;
    std::vector<Index> dims = t.cp.shape.dims();
    for (int k = 0; k <= t.state_modes(); ++k) {
      p.cp.factors[static_cast<std::size_t>(k)] = vt * t.cp.factors[static_cast<std::size_t>(k)];
      dims[static_cast<std::size_t>(k)] = q;
    }
    p.cp.shape = Shape(std::move(dims));
    out.terms.push_back(std::move(p));
  }

  Rng rng(0x6a09e667f3bcc908ULL);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector xh = rng.normal_vector(q);
    const Vector u = rng.normal_vector(sys.inputs());
    const Vector ref = vt * sys.rhs(v * xh, u);
    out.galerkin_defect = std::max(out.galerkin_defect, gap(out.rhs(xh, u), ref));
  }
  if (!(out.galerkin_defect <= 1e-10)) {
    throw NumericalError("reduced model violates Galerkin consistency (relative gap " + std::to_string(out.galerkin_defect) + ")");
  }
  return out;
}

PolynomialSystem project_dense(const PolynomialSystem& sys, const Matrix& v) {
  sys.validate();
  check_basis(v, sys.n);
  const Index n = sys.n, q = v.cols(), m = sys.m;
  const Matrix vt = v.transpose();
  PolynomialSystem out = PolynomialSystem::zeros(q, m);
  out.input = sys.input;
  out.A = vt * sys.A * v;
  out.E = vt * sys.E;
  auto project = [&](const Matrix& flat, std::vector<Index> dims, int state_modes) {
    DenseTensor t = reshape(Eigen::Map<const Vector>(flat.data(), flat.size()), Shape(dims));
    for (int k = 1; k <= state_modes + 1; ++k) t = mode_product(t, k, vt);
    return Matrix(Eigen::Map<const Matrix>(t.data().data(), q, t.size() / q));
  };
  out.B = project(sys.B, {n, n, n}, 2);
  out.C = project(sys.C, {n, n, n, n}, 3);
  if (m > 0) out.D = project(sys.D, {n, n, m}, 1);
  return out;
}

Projection build_projection(const Dynamics& sys, const InputSignal& u, const Vector& x0, const SimulationOptions& opts,
                            Index q) {
  if (q < 1 || q > sys.states()) throw ValidationError("reduced order q must lie in [1, n]");
  const Trajectory traj = simulate(sys, u, x0, opts);
  const linalg::Svd svd = linalg::thin_svd(traj.x);
  Projection p;
  p.singular_values = svd.s;
  const Index rank = linalg::numerical_rank(svd.s, traj.x.rows(), traj.x.cols());
  Index keep = q;
  if (rank < q) {
    keep = std::max<Index>(rank, 1);
    p.warning = "snapshot rank " + std::to_string(rank) + " is below q = " + std::to_string(q) + "; using q = " + std::to_string(keep);
  }
  p.V = svd.u.leftCols(keep);
  return p;
}

namespace {

template <typename System>
Complexity measure(const System& sys, const Vector& x, const Vector& u) {
  Complexity c;
  OpCounter total, nonlinear;
  sys.rhs(x, u, &total);
  sys.nonlinear_rhs(x, u, &nonlinear);
  c.rhs_nonlinear = nonlinear.madds;
  c.rhs_linear = total.madds - nonlinear.madds;
  total = {};
  nonlinear = {};
  sys.jacobian(x, u, &total);
  sys.nonlinear_jacobian(x, u, &nonlinear);
  c.jacobian_nonlinear = nonlinear.madds;
  c.jacobian_linear = total.madds - nonlinear.madds;
  return c;
}

FactoredTerm random_term(FactoredTerm::Kind kind, Index q, Index r, Index m, bool shared, Rng& rng) {
  FactoredTerm t;
  t.kind = kind;
  t.shared = shared;
  std::vector<Index> dims{q};
  const int ns = kind == FactoredTerm::Kind::quadratic ? 2 : kind == FactoredTerm::Kind::cubic ? 3 : 1;
  for (int k = 0; k < ns; ++k) dims.push_back(q);
  if (kind == FactoredTerm::Kind::bilinear) dims.push_back(m);
  t.cp.shape = Shape(dims);
  t.cp.weights = Vector::Ones(r);
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (shared && k > 1 && static_cast<int>(k) <= ns) {
      t.cp.factors.push_back(t.cp.factors[1]);
    } else {
      t.cp.factors.push_back(rng.normal_matrix(dims[k], r) / std::sqrt(static_cast<double>(dims[k])));
    }
  }
  return t;
}

FactoredSystem random_factored(Index q, Index r, Index m, bool shared, Rng& rng) {
  FactoredSystem s;
  s.A = -Matrix::Identity(q, q);
  s.E = rng.normal_matrix(q, m);
  s.terms.push_back(random_term(FactoredTerm::Kind::quadratic, q, r, m, shared, rng));
  s.terms.push_back(random_term(FactoredTerm::Kind::cubic, q, r, m, shared, rng));
  if (m > 0) s.terms.push_back(random_term(FactoredTerm::Kind::bilinear, q, r, m, false, rng));
  return s;
}

}  // namespace

Complexity complexity_report(const FactoredSystem& sys, const Vector& x, const Vector& u) {
  Complexity c = measure(sys, x, u);
  c.storage_nonlinear = sys.nonlinear_storage();
  return c;
}

Complexity complexity_report(const PolynomialSystem& sys, const Vector& x, const Vector& u) {
  Complexity c = measure(sys, x, u);
  c.storage_nonlinear = static_cast<std::int64_t>(sys.B.size() + sys.C.size() + sys.D.size());
  return c;
}

std::vector<BenchRow> complexity_bench(const std::vector<Index>& qs, Index r, Index m, std::uint64_t seed) {
  if (qs.empty() || r < 1 || m < 0) throw ValidationError("bench needs sizes, r >= 1 and m >= 0");
  Rng rng(seed);
  std::vector<BenchRow> rows;
  for (Index q : qs) {
    if (q < 1) throw ValidationError("bench sizes must be positive");
    BenchRow row;
    row.q = q;
    row.r = r;
    const FactoredSystem f = random_factored(q, r, m, false, rng);
    const FactoredSystem s = random_factored(q, r, m, true, rng);
    const Vector x = rng.normal_vector(q), u = rng.normal_vector(m);
    row.factored = complexity_report(f, x, u);
    row.symmetric = complexity_report(s, x, u);
    row.dense = complexity_report(to_dense(f), x, u);
    rows.push_back(row);
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope fit needs at least two matching points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0 && y[i] > 0)) throw ValidationError("slope fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw ValidationError("slope fit needs distinct x values");
  return (n * sxy - sx * sy) / den;
}

}  // namespace tenkit
