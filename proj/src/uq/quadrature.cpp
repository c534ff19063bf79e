#include "tenkit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tenkit/error.hpp"

namespace tenkit {

void tridiagonal_eigen(const Vector& diag, const Vector& off, Vector& values, Matrix& vectors) {
  const Index n = diag.size();
  if (n == 0) throw DimensionError("tridiagonal eigenproblem of size 0");
  if (off.size() != n - 1) throw DimensionError("tridiagonal off-diagonal must have length n-1");
  Vector d = diag;
  Vector e = Vector::Zero(n);  // e[i] couples d[i] and d[i+1]
  e.head(n - 1) = off;
  Matrix z = Matrix::Identity(n, n);
  const double eps = std::numeric_limits<double>::epsilon();

  for (Index l = 0; l < n; ++l) {
    int iter = 0;
    Index m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (++iter > 60) throw NumericalError("tridiagonal QL iteration did not converge");
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool deflated = false;
      for (Index i = m - 1; i >= l; --i) {
        double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        for (Index k = 0; k < n; ++k) {
          f = z(k, i + 1);
          z(k, i + 1) = s * z(k, i) + c * f;
          z(k, i) = c * z(k, i) - s * f;
        }
      }
      if (deflated) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (true);
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return d[a] < d[b]; });
  values.resize(n);
  vectors.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    values[j] = d[order[static_cast<std::size_t>(j)]];
    vectors.col(j) = z.col(order[static_cast<std::size_t>(j)]);
  }
}

GaussRule golub_welsch(const Recurrence& rec, Index n) {
  if (n < 1) throw ValidationError("Gauss rule needs at least one node");
  if (rec.size() < n) throw ValidationError("recurrence has fewer than " + std::to_string(n) + " coefficients");
  Vector off(n - 1);
  for (Index k = 1; k < n; ++k) {
    if (!(rec.beta[k] > 0)) throw NumericalError("recurrence coefficient beta_" + std::to_string(k) + " is not positive");
    off[k - 1] = std::sqrt(rec.beta[k]);
  }
  Vector values;
  Matrix vectors;
  tridiagonal_eigen(rec.alpha.head(n), off, values, vectors);
  GaussRule rule;
  rule.nodes = values;
  rule.weights = rec.beta[0] * vectors.row(0).transpose().array().square().matrix();
  return rule;
}

Measure Measure::gaussian() { return Measure(); }

Measure Measure::uniform() {
  Measure m;
  m.kind_ = Kind::uniform;
  return m;
}

Measure Measure::custom(Recurrence rec) {
  if (rec.size() < 1 || rec.beta.size() != rec.alpha.size()) throw ValidationError("custom measure needs matching alpha/beta");
  if (!(rec.beta[0] > 0)) throw ValidationError("custom measure needs positive total mass");
  Measure m;
  m.kind_ = Kind::custom;
  m.custom_ = std::move(rec);
  return m;
}

std::string Measure::name() const {
  switch (kind_) {
    case Kind::gaussian:
      return "gaussian";
    case Kind::uniform:
      return "uniform";
    case Kind::custom:
      return "custom";
  }
  return "unknown";
}

Index Measure::max_size() const {
  return kind_ == Kind::custom ? custom_.size() : std::numeric_limits<Index>::max();
}

Recurrence Measure::recurrence(Index n) const {
  if (n < 1) throw ValidationError("recurrence length must be positive");
  if (n > max_size()) {
    throw ValidationError("measure provides only " + std::to_string(max_size()) + " recurrence coefficients");
  }
  Recurrence r;
  r.alpha = Vector::Zero(n);
  r.beta = Vector::Zero(n);
  switch (kind_) {
    case Kind::gaussian:
      r.beta[0] = 1.0;
      for (Index k = 1; k < n; ++k) r.beta[k] = static_cast<double>(k);
      break;
    case Kind::uniform:
      r.beta[0] = 1.0;
      for (Index k = 1; k < n; ++k) {
        const double kk = static_cast<double>(k);
        r.beta[k] = kk * kk / (4.0 * kk * kk - 1.0);
      }
      break;
    case Kind::custom:
      r.alpha = custom_.alpha.head(n);
      r.beta = custom_.beta.head(n);
      break;
  }
  return r;
}

GaussRule Measure::rule(Index n) const { return golub_welsch(recurrence(n), n); }

Vector Measure::orthonormal(double x, int degree) const {
  if (degree < 0) throw ValidationError("polynomial degree must be non-negative");
  const Recurrence r = recurrence(degree + 1);
  Vector psi(degree + 1);
  psi[0] = 1.0 / std::sqrt(r.beta[0]);
  if (degree >= 1) psi[1] = (x - r.alpha[0]) * psi[0] / std::sqrt(r.beta[1]);
  for (int k = 1; k < degree; ++k) {
    psi[k + 1] = ((x - r.alpha[k]) * psi[k] - std::sqrt(r.beta[k]) * psi[k - 1]) / std::sqrt(r.beta[k + 1]);
  }
  return psi;
}

}  // namespace tenkit
