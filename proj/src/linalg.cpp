#include "tenkit/linalg.hpp"

#include <limits>

#include <Eigen/SVD>

namespace tenkit::linalg {

Svd thin_svd(const Matrix& a) {
  Svd out;
  if (a.size() == 0) throw DimensionError("SVD of an empty matrix");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.u = svd.matrixU();
  out.s = svd.singularValues();
  out.v = svd.matrixV();
  for (Index j = 0; j < out.u.cols(); ++j) {
    Index imax = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.u(imax, j) < 0) {
      out.u.col(j) *= -1.0;
      out.v.col(j) *= -1.0;
    }
  }
  return out;
}

Index numerical_rank(const Vector& s, Index rows, Index cols) {
  if (s.size() == 0 || s[0] <= 0) return 0;
  const double tol = static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon() * s[0];
  Index r = 0;
  while (r < s.size() && s[r] > tol) ++r;
  return r;
}

Vector canonicalize_column_signs(Matrix& m) {
  Vector signs = Vector::Ones(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    Index imax = 0;
    m.col(j).cwiseAbs().maxCoeff(&imax);
    if (m(imax, j) < 0) {
      m.col(j) *= -1.0;
      signs[j] = -1.0;
    }
  }
  return signs;
}

Index rank_for_tail(const Vector& s, double delta) {
  const double delta2 = delta * delta;
  double tail = 0.0;
  Index r = s.size();
  while (r > 0) {
    const double next = tail + s[r - 1] * s[r - 1];
    if (next > delta2) break;
    tail = next;
    --r;
  }
  return r;
}

Vector normalize_columns(Matrix& m) {
  Vector norms(m.cols());
  for (Index j = 0; j < m.cols(); ++j) {
    norms[j] = m.col(j).norm();
    if (norms[j] > 0) {
      m.col(j) /= norms[j];
    } else {
      m.col(j).setZero();
      m(0, j) = 1.0;
    }
  }
  return norms;
}

Matrix khatri_rao_fastest_first(const std::vector<const Matrix*>& factors) {
  if (factors.empty()) throw DimensionError("Khatri-Rao product of no factors");
  const Index r = factors.front()->cols();
  Matrix out = *factors.front();
  for (std::size_t f = 1; f < factors.size(); ++f) {
    const Matrix& next = *factors[f];
    if (next.cols() != r) throw DimensionError("Khatri-Rao factors need equal column counts");
    Matrix grown(out.rows() * next.rows(), r);
    for (Index i = 0; i < next.rows(); ++i) {
      grown.middleRows(i * out.rows(), out.rows()) = out * next.row(i).asDiagonal();
    }
    out = std::move(grown);
  }
  return out;
}

}  // namespace tenkit::linalg
