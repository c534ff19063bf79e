#pragma once

#include <Eigen/Core>

#include "tenkit/tensor.hpp"

namespace tenkit::linalg {

struct Svd {
  Matrix u;
  Vector s;
  Matrix v;
};

/// Thin SVD with singular vectors sign-fixed so the largest-magnitude entry of
/// each left vector is positive (right vector flipped alongside).
Svd thin_svd(const Matrix& a);

/// Number of singular values above max(m, n) * eps * s_max.
Index numerical_rank(const Vector& s, Index rows, Index cols);

/// Flip column signs so each column's largest-magnitude entry is positive.
/// Returns the applied signs.
Vector canonicalize_column_signs(Matrix& m);

/// Smallest rank whose discarded tail sqrt(sum_{i>=r} s_i^2) is at most delta.
Index rank_for_tail(const Vector& s, double delta);

/// Columns normalized to unit 2-norm; norms returned. Zero columns become e_1.
Vector normalize_columns(Matrix& m);

/// Khatri-Rao product with the FIRST listed matrix varying fastest in the row index.
Matrix khatri_rao_fastest_first(const std::vector<const Matrix*>& factors);

}  // namespace tenkit::linalg
