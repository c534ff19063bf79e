#include <cmath>

#include <Eigen/QR>

#include "tenkit/decomp.hpp"
#include "tenkit/linalg.hpp"

namespace tenkit {

namespace {

using SliceMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

Index left_rank(const DenseTensor& core) { return core.shape().dims()[0]; }
Index mode_size(const DenseTensor& core) { return core.shape().dims()[1]; }
Index right_rank(const DenseTensor& core) { return core.shape().dims()[2]; }

/// G(:, i, :) as an r_{k-1} x r_k matrix (i is 0-based).
SliceMap slice(const DenseTensor& core, Index i) {
  const Index r0 = left_rank(core);
  const Index n = mode_size(core);
  return SliceMap(core.data().data() + r0 * i, r0, right_rank(core), Eigen::OuterStride<>(r0 * n));
}

/// (r_{k-1} n_k) x r_k view.
Eigen::Map<const Matrix> left_unfolding(const DenseTensor& core) {
  return {core.data().data(), left_rank(core) * mode_size(core), right_rank(core)};
}

/// r_{k-1} x (n_k r_k) view.
Eigen::Map<const Matrix> right_unfolding(const DenseTensor& core) {
  return {core.data().data(), left_rank(core), mode_size(core) * right_rank(core)};
}

DenseTensor make_core(Index r0, Index n, Index r1, const Matrix& flat) {
  return DenseTensor(Shape{r0, n, r1}, Eigen::Map<const Vector>(flat.data(), flat.size()));
}

void check_same_shape(const TTModel& a, const TTModel& b) {
  if (!(a.shape() == b.shape())) throw DimensionError("tensor trains have different shapes");
}

}  // namespace

Shape TTModel::shape() const {
  std::vector<Index> dims;
  for (const auto& c : cores) dims.push_back(mode_size(c));
  return Shape(std::move(dims));
}

std::vector<Index> TTModel::ranks() const {
  std::vector<Index> r{1};
  for (const auto& c : cores) r.push_back(right_rank(c));
  return r;
}

double TTModel::entry(const MultiIndex& idx) const {
  Matrix row = slice(cores.front(), idx[0] - 1);
  for (std::size_t k = 1; k < cores.size(); ++k) row = row * slice(cores[k], idx[k] - 1);
  return row(0, 0);
}

DenseTensor densify(const TTModel& m) {
  Matrix acc = left_unfolding(m.cores.front());  // n_1 x r_1
  for (std::size_t k = 1; k < m.cores.size(); ++k) {
    Matrix next = acc * right_unfolding(m.cores[k]);  // N x (n_k r_k)
    const Index rk = right_rank(m.cores[k]);
    acc = Eigen::Map<const Matrix>(next.data(), next.size() / rk, rk);
  }
  return DenseTensor(m.shape(), Eigen::Map<const Vector>(acc.data(), acc.size()));
}

TTModel tt_svd(const DenseTensor& a, double eps) {
  if (!(eps >= 0.0)) throw ValidationError("TT-SVD error budget must be non-negative");
  const int d = a.order();
  const auto& dims = a.shape().dims();
  TTModel tt;
  if (d == 1) {
    tt.cores.push_back(DenseTensor(Shape{1, dims[0], 1}, a.data()));
    return tt;
  }
  const double delta = eps * frobenius_norm(a) / std::sqrt(static_cast<double>(d - 1));
  Matrix c = Eigen::Map<const Matrix>(a.data().data(), dims[0], a.size() / dims[0]);
  Index r_prev = 1;
  for (int k = 0; k < d - 1; ++k) {
    const Index rows = r_prev * dims[k];
    c.resize(rows, c.size() / rows);  // column-major reinterpretation
    linalg::Svd svd = linalg::thin_svd(c);
    const Index r_num = std::max<Index>(1, linalg::numerical_rank(svd.s, c.rows(), c.cols()));
    const Index r = std::max<Index>(1, std::min(linalg::rank_for_tail(svd.s, delta), r_num));
    tt.cores.push_back(make_core(r_prev, dims[k], r, svd.u.leftCols(r)));
    c = svd.s.head(r).asDiagonal() * svd.v.leftCols(r).transpose();
    r_prev = r;
  }
  tt.cores.push_back(make_core(r_prev, dims[d - 1], 1, c));
  return tt;
}

TTModel tt_round(const TTModel& t, double eps) {
  if (!(eps >= 0.0)) throw ValidationError("TT rounding budget must be non-negative");
  const int d = t.order();
  if (d == 1) return t;
  std::vector<Matrix> cores;  // right unfoldings during the orthogonalization sweep
  std::vector<Index> n(d), r = t.ranks();
  for (int k = 0; k < d; ++k) {
    n[k] = mode_size(t.cores[k]);
    cores.push_back(right_unfolding(t.cores[k]));
  }
  // Right-to-left: make cores 2..d right-orthonormal.
  for (int k = d - 1; k >= 1; --k) {
    Eigen::HouseholderQR<Matrix> qr(cores[k].transpose());  // (n r_k) x r_{k-1}
    const Index m = std::min(cores[k].cols(), cores[k].rows());
    Matrix q = qr.householderQ() * Matrix::Identity(cores[k].cols(), m);
    Matrix rt = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    cores[k] = q.transpose();  // m x (n_k r_k)
    // Previous core as (r_{k-2} n_{k-1}) x r_{k-1}, times R^T.
    Matrix prev_left = Eigen::Map<const Matrix>(cores[k - 1].data(), r[k - 1] * n[k - 1], r[k]);
    Matrix updated = prev_left * rt.transpose();
    r[k] = m;
    cores[k - 1] = Eigen::Map<const Matrix>(updated.data(), r[k - 1], n[k - 1] * m);
  }
  const double norm = cores[0].norm();
  const double delta = eps * norm / std::sqrt(static_cast<double>(d - 1));
  TTModel out;
  for (int k = 0; k < d - 1; ++k) {
    Matrix left = Eigen::Map<const Matrix>(cores[k].data(), r[k] * n[k], r[k + 1]);
    linalg::Svd svd = linalg::thin_svd(left);
    const Index r_num = std::max<Index>(1, linalg::numerical_rank(svd.s, left.rows(), left.cols()));
    const Index keep = std::max<Index>(1, std::min(linalg::rank_for_tail(svd.s, delta), r_num));
    out.cores.push_back(make_core(r[k], n[k], keep, svd.u.leftCols(keep)));
    Matrix carry = svd.s.head(keep).asDiagonal() * svd.v.leftCols(keep).transpose();  // keep x r_{k+1}
    cores[k + 1] = carry * cores[k + 1];
    r[k + 1] = keep;
  }
  out.cores.push_back(make_core(r[d - 1], n[d - 1], 1, cores[d - 1]));
  return out;
}

TTModel tt_sum(const TTModel& a, const TTModel& b) {
  check_same_shape(a, b);
  const int d = a.order();
  if (d == 1) return TTModel{{a.cores[0] + b.cores[0]}};
  TTModel out;
  for (int k = 0; k < d; ++k) {
    const DenseTensor& ga = a.cores[k];
    const DenseTensor& gb = b.cores[k];
    const Index n = mode_size(ga);
    const Index r0 = k == 0 ? 1 : left_rank(ga) + left_rank(gb);
    const Index r1 = k == d - 1 ? 1 : right_rank(ga) + right_rank(gb);
    Vector data = Vector::Zero(r0 * n * r1);
    for (Index i = 0; i < n; ++i) {
      Eigen::Map<Matrix, 0, Eigen::OuterStride<>> s(data.data() + r0 * i, r0, r1, Eigen::OuterStride<>(r0 * n));
      if (k == 0) {
        s.leftCols(right_rank(ga)) = slice(ga, i);
        s.rightCols(right_rank(gb)) = slice(gb, i);
      } else if (k == d - 1) {
        s.topRows(left_rank(ga)) = slice(ga, i);
        s.bottomRows(left_rank(gb)) = slice(gb, i);
      } else {
        s.topLeftCorner(left_rank(ga), right_rank(ga)) = slice(ga, i);
        s.bottomRightCorner(left_rank(gb), right_rank(gb)) = slice(gb, i);
      }
    }
    out.cores.push_back(DenseTensor(Shape{r0, n, r1}, std::move(data)));
  }
  return out;
}

TTModel tt_scaled(const TTModel& t, double s) {
  TTModel out = t;
  out.cores[0] = s * out.cores[0];
  return out;
}

TTModel tt_hadamard(const TTModel& a, const TTModel& b) {
  check_same_shape(a, b);
  TTModel out;
  for (int k = 0; k < a.order(); ++k) {
    const DenseTensor& ga = a.cores[k];
    const DenseTensor& gb = b.cores[k];
    const Index n = mode_size(ga);
    const Index r0 = left_rank(ga) * left_rank(gb);
    const Index r1 = right_rank(ga) * right_rank(gb);
    Vector data(r0 * n * r1);
    for (Index i = 0; i < n; ++i) {
      Eigen::Map<Matrix, 0, Eigen::OuterStride<>> s(data.data() + r0 * i, r0, r1, Eigen::OuterStride<>(r0 * n));
      s = kronecker_product(Matrix(slice(ga, i)), Matrix(slice(gb, i)));
    }
    out.cores.push_back(DenseTensor(Shape{r0, n, r1}, std::move(data)));
  }
  return out;
}

TTModel tt_hadamard(const TTModel& a, const Rank1Tensor& w) {
  if (!(a.shape() == w.shape())) throw DimensionError("TT times rank-1: shape mismatch");
  TTModel out;
  for (int k = 0; k < a.order(); ++k) {
    const DenseTensor& g = a.cores[k];
    const Index r0 = left_rank(g), n = mode_size(g), r1 = right_rank(g);
    Vector data = g.data();
    for (Index b = 0; b < r1; ++b)
      for (Index i = 0; i < n; ++i) data.segment(r0 * (i + n * b), r0) *= w.vectors[k][i];
    out.cores.push_back(DenseTensor(g.shape(), std::move(data)));
  }
  out.cores[0] = w.weight * out.cores[0];
  return out;
}

TTModel tt_constant(const Shape& shape, double value) {
  TTModel out;
  for (int k = 0; k < shape.order(); ++k) {
    const double v = k == 0 ? value : 1.0;
    out.cores.push_back(DenseTensor::constant(Shape{1, shape.dims()[k], 1}, v));
  }
  return out;
}

double tt_inner(const TTModel& a, const TTModel& b) {
  check_same_shape(a, b);
  Matrix m = Matrix::Ones(1, 1);  // r_a x r_b
  for (int k = 0; k < a.order(); ++k) {
    const DenseTensor& ga = a.cores[k];
    const DenseTensor& gb = b.cores[k];
    Matrix next = Matrix::Zero(right_rank(ga), right_rank(gb));
    for (Index i = 0; i < mode_size(ga); ++i) next.noalias() += slice(ga, i).transpose() * m * slice(gb, i);
    m = std::move(next);
  }
  return m(0, 0);
}

std::int64_t parameter_count(const TTModel& m) {
  std::int64_t total = 0;
  for (const auto& c : m.cores) total += c.size();
  return total;
}

double factored_inner_rank1(const TTModel& m, const Rank1Tensor& w, OpCounter* ops) {
  if (!(m.shape() == w.shape())) throw DimensionError("factored inner product: shape mismatch");
  Matrix row = Matrix::Ones(1, 1);
  for (int k = 0; k < m.order(); ++k) {
    const DenseTensor& g = m.cores[k];
    // sum_i w_k(i) G_k(:, i, :), then row * that
    Matrix s = Matrix::Zero(left_rank(g), right_rank(g));
    for (Index i = 0; i < mode_size(g); ++i) s.noalias() += w.vectors[k][i] * slice(g, i);
    count(ops, g.size());
    row = row * s;
    count(ops, row.cols() * s.rows());
  }
  return w.weight * row(0, 0);
}

std::int64_t cp_parameter_count(std::int64_t n, std::int64_t d, std::int64_t r) { return n * d * r; }

std::int64_t tucker_parameter_count(std::int64_t n, std::int64_t d, std::int64_t r) {
  std::int64_t core = 1;
  for (std::int64_t k = 0; k < d; ++k) core *= r;
  return core + n * d * r;
}

std::int64_t tt_parameter_count(std::int64_t n, std::int64_t d, std::int64_t r) {
  if (d == 1) return n;
  return n * (d - 2) * r * r + 2 * n * r;
}

}  // namespace tenkit
