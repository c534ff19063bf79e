#include <doctest.h>

#include <cmath>

#include "tenkit/error.hpp"
#include "tenkit/mor.hpp"
#include "tenkit/random.hpp"
#include "test_helpers.hpp"

#include <Eigen/QR>

using namespace tenkit;
using tenkit::testing::rel_diff;

namespace {

PolynomialSystem random_system(Index n, Index m, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  PolynomialSystem s = PolynomialSystem::zeros(n, m);
  s.A = rng.normal_matrix(n, n) * scale;
  s.B = rng.normal_matrix(n, n * n) * scale;
  s.C = rng.normal_matrix(n, n * n * n) * scale;
  s.D = rng.normal_matrix(n, n * m) * scale;
  s.E = rng.normal_matrix(n, m) * scale;
  return s;
}

/// dx/dt = -x - 0.2 x^3 componentwise plus weak mixing; A + A^T negative definite.
PolynomialSystem dissipative_system(Index n, Index m, std::uint64_t seed) {
  Rng rng(seed);
  PolynomialSystem s = PolynomialSystem::zeros(n, m);
  const Matrix skew = rng.normal_matrix(n, n);
  s.A = -2.0 * Matrix::Identity(n, n) + 0.3 * (skew - skew.transpose());
  for (Index i = 0; i < n; ++i) s.C(i, i + n * i + n * n * i) = -0.2;
  const Matrix w = 0.1 * rng.normal_matrix(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) s.B(i, j + n * j) = w(i, j);  // x_j^2 couplings
  s.E = rng.normal_matrix(n, m);
  s.D = 0.05 * rng.normal_matrix(n, n * m);
  return s;
}

Matrix fd_jacobian(const Dynamics& sys, const Vector& x, const Vector& u) {
  const Index n = x.size();
  Matrix j(n, n);
  for (Index k = 0; k < n; ++k) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
    Vector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.col(k) = (sys.rhs(xp, u) - sys.rhs(xm, u)) / (2 * h);
  }
  return j;
}

}  // namespace

TEST_CASE("dense rhs follows the Kronecker definition") {
  PolynomialSystem s = random_system(3, 2, 1);
  Rng rng(2);
  const Vector x = rng.normal_vector(3), u = rng.normal_vector(2);
  const Vector x2 = kronecker_power(x, 2), x3 = kronecker_power(x, 3);
  Vector ux(6);
  for (Index p = 0; p < 2; ++p)
    for (Index i = 0; i < 3; ++i) ux[p * 3 + i] = u[p] * x[i];
  const Vector expect = s.A * x + s.B * x2 + s.C * x3 + s.D * ux + s.E * u;
  CHECK(rel_diff(s.rhs(x, u), expect) < 1e-14);
  PolynomialSystem bad = s;
  bad.B.resize(3, 8);
  CHECK_THROWS_AS(bad.validate(), DimensionError);
}

TEST_CASE("tensorized squares") {
  PolynomialSystem s = PolynomialSystem::zeros(2, 1);
  s.A << -1, 0.5, 0, -2;
  s.B(0, 0) = 1.0;  // x1 x1 sits at column 0
  s.B(1, 3) = 1.0;  // x2 x2 sits at column 1 + 2 * 1
  s.E << 1, 0;
  TensorizedSystem t = tensorize(s);
  CHECK(t.fit_ok);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vector x = rng.normal_vector(2), u = rng.normal_vector(1);
    Vector sq(2);
    sq << x[0] * x[0], x[1] * x[1];
    CHECK(rel_diff(s.nonlinear_rhs(x, u), sq) < 1e-14);
    CHECK((t.rhs(x, u) - s.rhs(x, u)).norm() <= 1e-10 * s.rhs(x, u).norm());
  }
}

TEST_CASE("zero nonlinearity tensorizes to a zero-weight rank-1 term") {
  PolynomialSystem s = PolynomialSystem::zeros(3, 1);
  s.A = -Matrix::Identity(3, 3);
  TensorizedSystem t = tensorize(s);
  const FactoredTerm* b = t.term(FactoredTerm::Kind::quadratic);
  REQUIRE(b != nullptr);
  CHECK(b->rank() == 1);
  CHECK(b->cp.weights[0] == 0.0);
  Vector x(3), u(1);
  x << 1, 2, 3;
  u << 4;
  CHECK(t.rhs(x, u) == -x);
}

TEST_CASE("random system tensorization") {
  const Index n = 6;
  PolynomialSystem s = random_system(n, 2, 4);
  TensorizeOptions opts;
  opts.eps = 1e-8;
  TensorizedSystem t = tensorize(s, opts);
  CHECK(t.fit_ok);
  CHECK(t.term(FactoredTerm::Kind::quadratic)->rank() <= n * n);
  CHECK(t.term(FactoredTerm::Kind::cubic)->rank() <= n * n * n);
  CHECK(t.term(FactoredTerm::Kind::bilinear)->rank() <= n * 2);
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const Vector x = rng.normal_vector(n), u = rng.normal_vector(2);
    const Vector ref = s.rhs(x, u);
    CHECK((t.rhs(x, u) - ref).norm() <= 1e-6 * ref.norm());
  }
  // The dense form of the CP model reproduces it exactly.
  const PolynomialSystem d = to_dense(t);
  const Vector x = rng.normal_vector(n), u = rng.normal_vector(2);
  CHECK(rel_diff(d.rhs(x, u), t.rhs(x, u)) < 1e-12);
}

TEST_CASE("symmetric tensorization shares the state factor") {
  const Index n = 5;
  Rng rng(6);
  PolynomialSystem s = PolynomialSystem::zeros(n, 0);
  s.A = -Matrix::Identity(n, n);
  // B x x = sum_i a_i (s_i^T x)^2 with two terms; C x x x = a (s^T x)^3.
  const Matrix lead = rng.normal_matrix(n, 2), st = rng.normal_matrix(n, 2);
  for (int i = 0; i < 2; ++i) s.B += lead.col(i) * kronecker_power(Vector(st.col(i)), 2).transpose();
  s.C += lead.col(0) * kronecker_power(Vector(st.col(1)), 3).transpose();
  s.B.col(1) += Vector::Ones(n);  // antisymmetric part x1 x2 - x2 x1 does not change the rhs
  s.B.col(n) -= Vector::Ones(n);
  TensorizeOptions opts;
  opts.symmetric = true;
  opts.cpd.restarts = 3;
  TensorizedSystem t = tensorize(s, opts);
  CHECK(t.fit_ok);
  CHECK(t.term(FactoredTerm::Kind::quadratic)->shared);
  CHECK(t.term(FactoredTerm::Kind::quadratic)->rank() == 2);
  CHECK(t.term(FactoredTerm::Kind::cubic)->rank() == 1);
  for (int i = 0; i < 20; ++i) {
    const Vector x = rng.normal_vector(n), u;
    CHECK(rel_diff(t.rhs(x, u), s.rhs(x, u)) < 1e-7);
  }
  const FactoredTerm* b = t.term(FactoredTerm::Kind::quadratic);
  CHECK(b->storage() == 2 * n * 2 + 2);
}

TEST_CASE("analytic Jacobians against finite differences") {
  const Index n = 5;
  PolynomialSystem s = random_system(n, 2, 7, 0.5);
  TensorizedSystem t = tensorize(s);
  TensorizeOptions so;
  so.symmetric = true;
  so.rank_b = 3;
  so.rank_c = 3;
  TensorizedSystem ts = tensorize(s, so);
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const Vector x = rng.normal_vector(n), u = rng.normal_vector(2);
    for (const Dynamics* sys : {static_cast<const Dynamics*>(&s), static_cast<const Dynamics*>(&t),
                                static_cast<const Dynamics*>(&ts)}) {
      const Matrix ja = sys->jacobian(x, u);
      CHECK((ja - fd_jacobian(*sys, x, u)).norm() <= 1e-5 * ja.norm());
    }
  }
}

TEST_CASE("Galerkin reduction") {
  const Index n = 8, q = 3;
  PolynomialSystem s = random_system(n, 1, 9, 0.3);
  TensorizeOptions opts;
  opts.rank_b = 4;
  opts.rank_c = 4;
  opts.rank_d = 2;
  opts.eps = 1.0;
  TensorizedSystem t = tensorize(s, opts);

  ReducedSystem same = reduce(t, Matrix::Identity(n, n));
  for (std::size_t k = 0; k < t.terms.size(); ++k)
    for (std::size_t f = 0; f < t.terms[k].cp.factors.size(); ++f)
      CHECK((same.terms[k].cp.factors[f] - t.terms[k].cp.factors[f]).norm() == 0.0);

  Rng rng(10);
  const Matrix v = Eigen::HouseholderQR<Matrix>(rng.normal_matrix(n, q)).householderQ() * Matrix::Identity(n, q);
  ReducedSystem r = reduce(t, v);
  CHECK(r.galerkin_defect <= 1e-10);
  for (int i = 0; i < 100; ++i) {
    const Vector xh = rng.normal_vector(q), u = rng.normal_vector(1);
    CHECK(rel_diff(r.rhs(xh, u), Vector(v.transpose() * t.rhs(v * xh, u))) < 1e-10);
  }
  // Matrix-based projection of the same CP model agrees with the factored one.
  const PolynomialSystem dense = project_dense(to_dense(t), v);
  const Vector xh = rng.normal_vector(q), u = rng.normal_vector(1);
  CHECK(rel_diff(dense.rhs(xh, u), r.rhs(xh, u)) < 1e-10);
  CHECK(rel_diff(dense.jacobian(xh, u), r.jacobian(xh, u)) < 1e-10);

  CHECK_THROWS_AS(reduce(t, 2.0 * v), ValidationError);
  CHECK_THROWS_AS(reduce(t, Matrix::Identity(n + 1, q)), DimensionError);
}

TEST_CASE("reduced storage count") {
  Rng rng(11);
  FactoredTerm b;
  b.kind = FactoredTerm::Kind::quadratic;
  b.cp.shape = Shape({10, 10, 10});
  b.cp.weights = Vector::Ones(20);
  for (int k = 0; k < 3; ++k) b.cp.factors.push_back(rng.normal_matrix(10, 20));
  CHECK(b.storage() == 620);
  b.shared = true;
  CHECK(b.storage() == 420);
}

TEST_CASE("integrators against analytic solutions") {
  PolynomialSystem lin = PolynomialSystem::zeros(1, 0);
  lin.A(0, 0) = -1.0;
  SimulationOptions o;
  o.t_end = 1.0;
  o.dt = 0.01;
  const Vector one = Vector::Ones(1);
  Trajectory tr = simulate(lin, {}, one, o);
  CHECK(tr.t.size() == 101);
  CHECK(tr.t.back() == 1.0);
  CHECK(std::abs(tr.x(0, 100) - std::exp(-1.0)) < 1e-8);

  PolynomialSystem cubic = PolynomialSystem::zeros(1, 0);
  cubic.C(0, 0) = -1.0;
  tr = simulate(cubic, {}, one, o);
  for (std::size_t k = 0; k < tr.t.size(); ++k) CHECK(std::abs(tr.x(0, static_cast<Index>(k)) - 1.0 / std::sqrt(1.0 + 2.0 * tr.t[k])) < 1e-6);

  // Implicit Euler is first order: halving dt halves the error.
  o.integrator = Integrator::implicit_euler;
  const double exact = 1.0 / std::sqrt(3.0);
  const double e1 = std::abs(simulate(cubic, {}, one, o).x(0, 100) - exact);
  o.dt = 0.005;
  const double e2 = std::abs(simulate(cubic, {}, one, o).x(0, 200) - exact);
  CHECK(e1 < 1e-2);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));

  o.newton_max_iters = 1;
  o.newton_tol = 1e-14;
  CHECK_THROWS_AS(simulate(cubic, {}, one, o), NumericalError);
  o = {};
  o.dt = 0.0;
  CHECK_THROWS_AS(simulate(lin, {}, one, o), ValidationError);
}

TEST_CASE("factored and dense simulations agree") {
  const Index n = 6;
  PolynomialSystem s = dissipative_system(n, 1, 12);
  s.input = [](double t) { return Vector::Constant(1, std::sin(3 * t)); };
  TensorizedSystem t = tensorize(s);
  const PolynomialSystem d = to_dense(t);
  Rng rng(13);
  const Vector x0 = 0.5 * rng.normal_vector(n);
  for (Integrator ig : {Integrator::rk4, Integrator::implicit_euler}) {
    SimulationOptions o;
    o.t_end = 2.0;
    o.dt = 0.01;
    o.integrator = ig;
    const Trajectory a = simulate(t, s.input, x0, o), b = simulate(d, s.input, x0, o);
    CHECK((a.x - b.x).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("dissipative trajectories do not gain energy") {
  const Index n = 6;
  PolynomialSystem s = dissipative_system(n, 1, 14);
  s.B.setZero();
  s.D.setZero();
  SimulationOptions o;
  o.t_end = 3.0;
  o.dt = 0.01;
  Rng rng(15);
  const Trajectory tr = simulate(s, [](double) { return Vector::Zero(1); }, rng.normal_vector(n), o);
  for (Index k = 1; k < tr.x.cols(); ++k) CHECK(tr.x.col(k).norm() <= tr.x.col(k - 1).norm() * (1 + 1e-12));
}

TEST_CASE("POD projection") {
  const Index n = 6;
  PolynomialSystem s = PolynomialSystem::zeros(n, 1);
  s.A = -Matrix::Identity(n, n);
  s.A(0, 1) = 0.5;
  s.C(0, 0) = -0.1;
  s.B(1, 0) = 0.2;
  s.E(0, 0) = 1.0;
  s.E(1, 0) = 0.5;
  s.input = [](double t) { return Vector::Constant(1, std::cos(2 * t)); };
  SimulationOptions o;
  o.t_end = 4.0;
  o.dt = 0.01;
  Projection p = build_projection(s, s.input, Vector::Zero(n), o, 2);
  CHECK(p.warning.empty());
  REQUIRE(p.V.cols() == 2);
  CHECK(p.V.bottomRows(n - 2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((p.V.transpose() * p.V - Matrix::Identity(2, 2)).norm() < 1e-12);

  Projection wide = build_projection(s, s.input, Vector::Zero(n), o, 4);
  CHECK(wide.V.cols() == 2);
  CHECK(!wide.warning.empty());

  // q = n reproduces the full CP model trajectory.
  PolynomialSystem rich = dissipative_system(n, 1, 16);
  rich.input = s.input;
  TensorizedSystem t = tensorize(rich);
  Rng rng(17);
  const Vector x0 = rng.normal_vector(n);
  Projection full = build_projection(t, rich.input, x0, o, n);
  REQUIRE(full.V.cols() == n);
  ReducedSystem r = reduce(t, full.V);
  const Trajectory a = simulate(t, rich.input, x0, o);
  const Trajectory b = simulate(r, rich.input, full.V.transpose() * x0, o);
  CHECK((a.x - full.V * b.x).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("operation counts follow the complexity table") {
  const std::vector<Index> qs{5, 10, 20};
  const auto rows = complexity_bench(qs, 6, 1, 18);
  std::vector<double> x, fac, sym, dense, fac_j, dense_j;
  for (const auto& row : rows) {
    x.push_back(static_cast<double>(row.q));
    fac.push_back(static_cast<double>(row.factored.rhs_nonlinear));
    sym.push_back(static_cast<double>(row.symmetric.rhs_nonlinear));
    dense.push_back(static_cast<double>(row.dense.rhs_nonlinear));
    fac_j.push_back(static_cast<double>(row.factored.jacobian_nonlinear));
    dense_j.push_back(static_cast<double>(row.dense.jacobian_nonlinear));
    CHECK(row.symmetric.rhs_nonlinear < row.factored.rhs_nonlinear);
    CHECK(row.symmetric.storage_nonlinear < row.factored.storage_nonlinear);
    CHECK(row.dense.storage_nonlinear == row.q * row.q * row.q * (1 + row.q) + row.q * row.q);
  }
  CHECK(std::abs(loglog_slope(x, fac) - 1.0) <= 0.3);
  CHECK(std::abs(loglog_slope(x, sym) - 1.0) <= 0.3);
  CHECK(std::abs(loglog_slope(x, dense) - 4.0) <= 0.3);
  CHECK(std::abs(loglog_slope(x, fac_j) - 2.0) <= 0.3);
  CHECK(std::abs(loglog_slope(x, dense_j) - 5.0) <= 0.3);
}
