#include <Eigen/SVD>

#include "tenkit/decomp.hpp"
#include "tenkit/linalg.hpp"

namespace tenkit {

namespace {

/// Leading r left singular vectors and all singular values of a mode unfolding.
std::pair<Matrix, Vector> leading_left(const Matrix& unfolding, Index r) {
  if (r <= std::min(unfolding.rows(), unfolding.cols())) {
    linalg::Svd svd = linalg::thin_svd(unfolding);
    return {svd.u.leftCols(r), svd.s};
  }
  // More columns requested than the unfolding has singular pairs: complete the basis.
  Eigen::JacobiSVD<Matrix> svd(unfolding, Eigen::ComputeFullU);
  Matrix u = svd.matrixU().leftCols(r);
  linalg::canonicalize_column_signs(u);
  return {u, svd.singularValues()};
}

std::vector<Matrix> transposed(const std::vector<Matrix>& fs) {
  std::vector<Matrix> out;
  for (const auto& f : fs) out.push_back(f.transpose());
  return out;
}

}  // namespace

Shape TuckerModel::shape() const {
  std::vector<Index> dims;
  for (const auto& f : factors) dims.push_back(f.rows());
  return Shape(std::move(dims));
}

double TuckerModel::entry(const MultiIndex& idx) const {
  Rank1Tensor rows;
  for (std::size_t k = 0; k < factors.size(); ++k) rows.vectors.push_back(factors[k].row(idx[k] - 1).transpose());
  return inner(core, rows);
}

DenseTensor densify(const TuckerModel& m) { return multi_mode_product(m.core, m.factors); }

Vector slice_norms(const DenseTensor& a, int mode) {
  return matricize(a, mode).rowwise().norm();
}

TuckerModel hosvd(const DenseTensor& a) {
  TuckerModel m;
  m.hosvd = true;
  for (int k = 1; k <= a.order(); ++k) {
    const Matrix unfolding = matricize(a, k);
    linalg::Svd svd = linalg::thin_svd(unfolding);
    const Index r = std::max<Index>(1, linalg::numerical_rank(svd.s, unfolding.rows(), unfolding.cols()));
    m.factors.push_back(svd.u.leftCols(r));
    m.mode_singular_values.push_back(svd.s);
  }
  m.core = multi_mode_product(a, transposed(m.factors));
  return m;
}

TuckerResult tucker_truncate(const DenseTensor& a, const std::vector<Index>& ranks) {
  if (static_cast<int>(ranks.size()) != a.order()) throw DimensionError("Tucker truncation needs one rank per mode");
  TuckerResult out;
  out.model.hosvd = true;
  for (int k = 1; k <= a.order(); ++k) {
    const Index r = ranks[static_cast<std::size_t>(k - 1)];
    if (r < 1 || r > a.shape().extent(k)) {
      throw DimensionError("Tucker rank " + std::to_string(r) + " invalid for mode " + std::to_string(k));
    }
    auto [u, s] = leading_left(matricize(a, k), r);
    out.model.factors.push_back(std::move(u));
    out.model.mode_singular_values.push_back(std::move(s));
  }
  out.model.core = multi_mode_product(a, transposed(out.model.factors));
  const double norm_a = frobenius_norm(a);
  out.error = (a.data() - densify(out.model).data()).norm();
  out.rel_error = norm_a > 0 ? out.error / norm_a : 0.0;
  return out;
}

std::int64_t parameter_count(const TuckerModel& m) {
  std::int64_t total = m.core.size();
  for (const auto& f : m.factors) total += static_cast<std::int64_t>(f.rows()) * f.cols();
  return total;
}

double factored_inner_rank1(const TuckerModel& m, const Rank1Tensor& w, OpCounter* ops) {
  if (!(m.shape() == w.shape())) throw DimensionError("factored inner product: shape mismatch");
  Rank1Tensor projected;
  projected.weight = w.weight;
  for (std::size_t k = 0; k < m.factors.size(); ++k) {
    projected.vectors.push_back(m.factors[k].transpose() * w.vectors[k]);
    count(ops, m.factors[k].size());
  }
  count(ops, m.core.size());
  return inner(m.core, projected);
}

}  // namespace tenkit
