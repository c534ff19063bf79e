#pragma once

// One-dimensional probability measures described by their three-term
// recurrence, the orthonormal polynomials they induce, and Gauss rules
// computed by Golub-Welsch.

#include <string>
#include <vector>

#include "tenkit/tensor.hpp"

namespace tenkit {

/// Monic recurrence p_{k+1} = (x - alpha_k) p_k - beta_k p_{k-1}, with
/// beta_0 the total mass of the measure.
struct Recurrence {
  Vector alpha;
  Vector beta;

  Index size() const { return alpha.size(); }
};

struct GaussRule {
  Vector nodes;    // ascending
  Vector weights;  // sum to beta_0
};

/// Eigenvalues (ascending) and eigenvectors of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off` (length n-1), by QL
/// iteration with implicit Wilkinson shifts.
void tridiagonal_eigen(const Vector& diag, const Vector& off, Vector& values, Matrix& vectors);

/// n-point Gauss rule from the first n recurrence coefficients.
GaussRule golub_welsch(const Recurrence& rec, Index n);

class Measure {
public:
  enum class Kind { gaussian, uniform, custom };

  /// Standard normal; probabilists' Hermite recurrence.
  static Measure gaussian();
  /// Uniform on (-1, 1) as a probability measure; Legendre recurrence.
  static Measure uniform();
  /// Measure known only through its first recurrence coefficients.
  static Measure custom(Recurrence rec);

  Kind kind() const { return kind_; }
  std::string name() const;

  /// First n recurrence coefficients.
  Recurrence recurrence(Index n) const;
  /// Largest supported rule size (unbounded for the classical families).
  Index max_size() const;

  GaussRule rule(Index n) const;

  /// psi_0(x), ..., psi_degree(x): orthonormal polynomials.
  Vector orthonormal(double x, int degree) const;

private:
  Kind kind_ = Kind::gaussian;
  Recurrence custom_;
};

}  // namespace tenkit
