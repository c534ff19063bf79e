#include <cmath>

#include "tenkit/error.hpp"
#include "tenkit/mor.hpp"

namespace tenkit {

namespace {

Vector kron_vec(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

std::int64_t mul(Index a, Index b) { return static_cast<std::int64_t>(a) * static_cast<std::int64_t>(b); }

}  // namespace

void Dynamics::check_point(const Vector& x, const Vector& u) const {
  if (x.size() != states()) throw DimensionError("state vector has length " + std::to_string(x.size()) + ", expected " + std::to_string(states()));
  if (u.size() != inputs()) throw DimensionError("input vector has length " + std::to_string(u.size()) + ", expected " + std::to_string(inputs()));
}

Vector Dynamics::rhs(const Vector& x, const Vector& u, OpCounter* ops) const {
  check_point(x, u);
  Vector out = a() * x + nonlinear_rhs(x, u, ops);
  count(ops, mul(states(), states()));
  if (inputs() > 0) {
    out += e() * u;
    count(ops, mul(states(), inputs()));
  }
  return out;
}

Matrix Dynamics::jacobian(const Vector& x, const Vector& u, OpCounter* ops) const {
  check_point(x, u);
  Matrix j = nonlinear_jacobian(x, u, ops);
  j += a();
  count(ops, mul(states(), states()));
  return j;
}

PolynomialSystem PolynomialSystem::zeros(Index n, Index m) {
  if (n < 1 || m < 0) throw DimensionError("system needs n >= 1 states and m >= 0 inputs");
  PolynomialSystem s;
  s.n = n;
  s.m = m;
  s.A = Matrix::Zero(n, n);
  s.B = Matrix::Zero(n, n * n);
  s.C = Matrix::Zero(n, n * n * n);
  s.D = Matrix::Zero(n, n * m);
  s.E = Matrix::Zero(n, m);
  s.input = [m](double) { return Vector::Zero(m); };
  return s;
}

void PolynomialSystem::validate() const {
  auto check = [&](const Matrix& mat, Index cols, const char* name) {
    if (mat.rows() != n || mat.cols() != cols) {
      throw DimensionError(std::string(name) + " is " + std::to_string(mat.rows()) + "x" + std::to_string(mat.cols()) +
                           ", expected " + std::to_string(n) + "x" + std::to_string(cols));
    }
    if (!mat.allFinite()) throw ValidationError(std::string(name) + " has non-finite entries");
  };
  if (n < 1 || m < 0) throw DimensionError("system needs n >= 1 states and m >= 0 inputs");
  check(A, n, "A");
  check(B, n * n, "B");
  check(C, n * n * n, "C");
  check(D, n * m, "D");
  check(E, m, "E");
}

Vector PolynomialSystem::nonlinear_rhs(const Vector& x, const Vector& u, OpCounter* ops) const {
  const Vector x2 = kron_vec(x, x);
  const Vector x3 = kron_vec(x, x2);
  Vector out = B * x2 + C * x3;
  count(ops, mul(n, n) + mul(n, n * n) + mul(n * n, n) + mul(n, n * n * n));
  if (m > 0) {
    out += D * kron_vec(u, x);
    count(ops, mul(m, n) + mul(n, n * m));
  }
  return out;
}

Matrix PolynomialSystem::nonlinear_jacobian(const Vector& x, const Vector& u, OpCounter* ops) const {
  const Matrix id = Matrix::Identity(n, n);
  const Vector x2 = kron_vec(x, x);
  count(ops, mul(n, n));
  const Matrix i_x = kronecker_product(id, x);
  const Matrix kb = i_x + kronecker_product(x, id);
  Matrix j = B * kb;
  count(ops, mul(n, n * n) * n);
  const Matrix kc = kronecker_product(id, x2) + kronecker_product(x, i_x) + kronecker_product(x2, id);
  count(ops, 2 * mul(n * n * n, n));
  j += C * kc;
  count(ops, mul(n, n * n * n) * n);
  if (m > 0) {
    j += D * kronecker_product(u, id);
    count(ops, mul(n * m, n) + mul(n, n * m) * n);
  }
  return j;
}

int FactoredTerm::state_modes() const {
  switch (kind) {
    case Kind::quadratic:
      return 2;
    case Kind::cubic:
      return 3;
    case Kind::bilinear:
      return 1;
  }
  return 0;
}

std::int64_t FactoredTerm::storage() const {
  std::int64_t total = cp.rank();
  for (int k = 0; k < cp.order(); ++k) {
    if (shared && k > 1 && k <= state_modes()) continue;
    total += mul(cp.factors[static_cast<std::size_t>(k)].rows(), cp.rank());
  }
  return total;
}

namespace {

struct Projected {
  std::vector<Vector> state;  // one per state mode (one entry when shared)
  Vector input;               // empty unless bilinear
};

Projected project_point(const FactoredTerm& t, const Vector& x, const Vector& u, OpCounter* ops) {
  Projected p;
  const int ns = t.shared ? 1 : t.state_modes();
  for (int j = 1; j <= ns; ++j) {
    p.state.push_back(t.cp.factors[static_cast<std::size_t>(j)].transpose() * x);
    count(ops, mul(x.size(), t.rank()));
  }
  if (t.kind == FactoredTerm::Kind::bilinear) {
    p.input = t.cp.factors[2].transpose() * u;
    count(ops, mul(u.size(), t.rank()));
  }
  return p;
}

}  // namespace

Vector FactoredSystem::nonlinear_rhs(const Vector& x, const Vector& u, OpCounter* ops) const {
  Vector out = Vector::Zero(states());
  for (const FactoredTerm& t : terms) {
    const Projected p = project_point(t, x, u, ops);
    Vector c = t.cp.weights;
    if (t.shared) {
      c = c.cwiseProduct(p.state[0].array().pow(t.state_modes()).matrix());
      count(ops, mul(t.state_modes(), t.rank()));
    } else {
      for (const Vector& s : p.state) c = c.cwiseProduct(s);
      count(ops, mul(t.state_modes(), t.rank()));
    }
    if (p.input.size() > 0) {
      c = c.cwiseProduct(p.input);
      count(ops, t.rank());
    }
    out.noalias() += t.cp.factors[0] * c;
    count(ops, mul(states(), t.rank()));
  }
  return out;
}

Matrix FactoredSystem::nonlinear_jacobian(const Vector& x, const Vector& u, OpCounter* ops) const {
  const Index n = states();
  Matrix j = Matrix::Zero(n, n);
  for (const FactoredTerm& t : terms) {
    const Projected p = project_point(t, x, u, ops);
    const Index r = t.rank();
    Vector base = t.cp.weights;
    if (p.input.size() > 0) base = base.cwiseProduct(p.input);
    if (t.shared) {
      const int k = t.state_modes();
      const Vector g = base.cwiseProduct((static_cast<double>(k) * p.state[0].array().pow(k - 1)).matrix());
      count(ops, mul(k + 1, r));
      j.noalias() += (t.cp.factors[0] * g.asDiagonal()) * t.cp.factors[1].transpose();
      count(ops, mul(n, r) + mul(n, r) * n);
      continue;
    }
    const int ns = t.state_modes();
    for (int s = 0; s < ns; ++s) {
      Vector g = base;
      for (int l = 0; l < ns; ++l)
        if (l != s) g = g.cwiseProduct(p.state[static_cast<std::size_t>(l)]);
      count(ops, mul(ns, r));
      j.noalias() += (t.cp.factors[0] * g.asDiagonal()) * t.cp.factors[static_cast<std::size_t>(s + 1)].transpose();
      count(ops, mul(n, r) + mul(n, r) * n);
    }
  }
  return j;
}

const FactoredTerm* FactoredSystem::term(FactoredTerm::Kind kind) const {
  for (const auto& t : terms)
    if (t.kind == kind) return &t;
  return nullptr;
}

std::int64_t FactoredSystem::nonlinear_storage() const {
  std::int64_t total = 0;
  for (const auto& t : terms) total += t.storage();
  return total;
}

PolynomialSystem to_dense(const FactoredSystem& sys) {
  PolynomialSystem d = PolynomialSystem::zeros(sys.states(), sys.inputs());
  d.A = sys.A;
  d.E = sys.E;
  d.input = sys.input;
  for (const FactoredTerm& t : sys.terms) {
    const DenseTensor full = densify(t.cp);
    const Matrix flat = Eigen::Map<const Matrix>(full.data().data(), d.n, full.size() / d.n);
    switch (t.kind) {
      case FactoredTerm::Kind::quadratic:
        d.B += flat;
        break;
      case FactoredTerm::Kind::cubic:
        d.C += flat;
        break;
      case FactoredTerm::Kind::bilinear:
        d.D += flat;
        break;
    }
  }
  return d;
}

}  // namespace tenkit
