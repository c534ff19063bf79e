#pragma once

// Dense d-way tensors.
//
// Storage is first-index-fastest: with 1-based indices the linear offset of
// (i_1, ..., i_d) is (i_1-1) + n_1 (i_2-1) + n_1 n_2 (i_3-1) + ...
// vectorize() returns the storage verbatim, and matricize(A, n) groups the
// remaining indices in ascending mode order with earlier modes varying
// fastest. Every other module relies on these two conventions.
//
// Mode arguments and MultiIndex entries are 1-based.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tenkit/error.hpp"

namespace tenkit {

using Index = Eigen::Index;

class Shape {
public:
  Shape() = default;

  explicit Shape(std::vector<Index> dims) : dims_(std::move(dims)) { validate(); }
  Shape(std::initializer_list<Index> dims) : dims_(dims) { validate(); }

  int order() const { return static_cast<int>(dims_.size()); }

  /// n_k for 1-based mode k.
  Index extent(int mode) const {
    if (mode < 1 || mode > order()) {
      throw DimensionError("mode " + std::to_string(mode) + " out of range for order " +
                           std::to_string(order()));
    }
    return dims_[static_cast<std::size_t>(mode - 1)];
  }

  const std::vector<Index>& dims() const { return dims_; }

  /// Product of the extents.
  Index numel() const { return numel_; }

  bool empty() const { return dims_.empty(); }

  bool is_cubical() const {
    return !dims_.empty() &&
           std::all_of(dims_.begin(), dims_.end(), [&](Index n) { return n == dims_.front(); });
  }

  std::string to_string() const {
    std::string s;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      if (k) s += "x";
      s += std::to_string(dims_[k]);
    }
    return s;
  }

  friend bool operator==(const Shape& a, const Shape& b) { return a.dims_ == b.dims_; }

private:
  void validate() {
    if (dims_.empty()) throw DimensionError("tensor order must be at least 1");
    Index total = 1;
    for (Index n : dims_) {
      if (n < 1) throw DimensionError("tensor extents must be positive");
      if (__builtin_mul_overflow(total, n, &total)) {
        throw DimensionError("element count overflows the addressable size");
      }
    }
    numel_ = total;
  }

  std::vector<Index> dims_;
  Index numel_ = 0;
};

/// A tensor position (i_1, ..., i_d), 1-based.
class MultiIndex {
public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<Index> values) : values_(std::move(values)) {}
  MultiIndex(std::initializer_list<Index> values) : values_(values) {}

  int order() const { return static_cast<int>(values_.size()); }
  Index operator[](std::size_t k) const { return values_[k]; }
  Index& operator[](std::size_t k) { return values_[k]; }
  const std::vector<Index>& values() const { return values_; }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

private:
  std::vector<Index> values_;
};

inline bool in_range(const Shape& shape, const MultiIndex& idx) {
  if (idx.order() != shape.order()) return false;
  for (int k = 0; k < shape.order(); ++k) {
    if (idx[k] < 1 || idx[k] > shape.dims()[k]) return false;
  }
  return true;
}

/// 0-based storage offset of a 1-based multi-index.
inline Index linear_index(const Shape& shape, const MultiIndex& idx) {
  if (!in_range(shape, idx)) throw DimensionError("multi-index out of range for shape " + shape.to_string());
  Index offset = 0;
  Index stride = 1;
  for (int k = 0; k < shape.order(); ++k) {
    offset += (idx[k] - 1) * stride;
    stride *= shape.dims()[k];
  }
  return offset;
}

inline MultiIndex multi_index(const Shape& shape, Index offset) {
  if (offset < 0 || offset >= shape.numel()) throw DimensionError("linear offset out of range");
  std::vector<Index> values(shape.dims().size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] = offset % shape.dims()[k] + 1;
    offset /= shape.dims()[k];
  }
  return MultiIndex(std::move(values));
}

template <typename Scalar>
class Tensor {
public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Tensor() = default;

  /// Zero tensor.
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(Vector::Zero(shape_.numel())) {}

  Tensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.numel()) {
      throw DimensionError("data length " + std::to_string(data_.size()) + " does not match shape " +
                           shape_.to_string());
    }
    if (!data_.allFinite()) throw ValidationError("tensor entries must be finite");
  }

  static Tensor constant(Shape shape, Scalar value) {
    Vector v = Vector::Constant(shape.numel(), value);
    return Tensor(std::move(shape), std::move(v));
  }

  /// Builds entries from f(MultiIndex), visiting storage order.
  template <typename F>
  static Tensor generate(Shape shape, F&& f) {
    Vector v(shape.numel());
    std::vector<Index> idx(shape.dims().size(), 1);
    for (Index n = 0; n < v.size(); ++n) {
      v[n] = f(MultiIndex(idx));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        if (++idx[k] <= shape.dims()[k]) break;
        idx[k] = 1;
      }
    }
    return Tensor(std::move(shape), std::move(v));
  }

  const Shape& shape() const { return shape_; }
  int order() const { return shape_.order(); }
  Index size() const { return data_.size(); }
  const Vector& data() const { return data_; }

  Scalar operator()(const MultiIndex& idx) const { return data_[linear_index(shape_, idx)]; }
  Scalar operator[](Index offset) const { return data_[offset]; }

private:
  Shape shape_;
  Vector data_;
};

using DenseTensor = Tensor<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

namespace detail {

inline Index prod_before(const Shape& s, int mode0) {
  Index p = 1;
  for (int k = 0; k < mode0; ++k) p *= s.dims()[k];
  return p;
}

inline Index prod_after(const Shape& s, int mode0) {
  Index p = 1;
  for (int k = mode0 + 1; k < s.order(); ++k) p *= s.dims()[k];
  return p;
}

inline void check_mode(const Shape& s, int mode) {
  if (mode < 1 || mode > s.order()) {
    throw DimensionError("mode " + std::to_string(mode) + " out of range for order " + std::to_string(s.order()));
  }
}

inline Shape replace_extent(const Shape& s, int mode, Index n) {
  std::vector<Index> dims = s.dims();
  dims[static_cast<std::size_t>(mode - 1)] = n;
  return Shape(std::move(dims));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic

template <typename Scalar>
Tensor<Scalar> operator+(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (!(a.shape() == b.shape())) throw DimensionError("shape mismatch in tensor sum");
  return Tensor<Scalar>(a.shape(), a.data() + b.data());
}

template <typename Scalar>
Tensor<Scalar> operator-(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (!(a.shape() == b.shape())) throw DimensionError("shape mismatch in tensor difference");
  return Tensor<Scalar>(a.shape(), a.data() - b.data());
}

template <typename Scalar>
Tensor<Scalar> operator*(Scalar s, const Tensor<Scalar>& a) {
  return Tensor<Scalar>(a.shape(), s * a.data());
}

// ---------------------------------------------------------------------------
// Inner product and norm

template <typename Scalar>
Scalar inner(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (!(a.shape() == b.shape())) {
    throw DimensionError("inner product of tensors with shapes " + a.shape().to_string() + " and " +
                         b.shape().to_string());
  }
  return a.data().dot(b.data());
}

template <typename Scalar>
Scalar frobenius_norm(const Tensor<Scalar>& a) {
  return a.data().norm();
}

// ---------------------------------------------------------------------------
// k-mode product

/// B = A x_k U with U of size p x n_k; result extent p in mode k.
template <typename Scalar, typename Derived>
Tensor<Scalar> mode_product(const Tensor<Scalar>& a, int mode, const Eigen::MatrixBase<Derived>& u) {
  using Matrix = typename Tensor<Scalar>::Matrix;
  using Vector = typename Tensor<Scalar>::Vector;
  detail::check_mode(a.shape(), mode);
  const int k = mode - 1;
  const Index nk = a.shape().dims()[k];
  if (u.cols() != nk) {
    throw DimensionError("mode-" + std::to_string(mode) + " product: matrix has " + std::to_string(u.cols()) +
                         " columns, tensor extent is " + std::to_string(nk));
  }
  const Index p = u.rows();
  const Index left = detail::prod_before(a.shape(), k);
  const Index right = detail::prod_after(a.shape(), k);
  const Matrix ut = u.transpose();
  Vector out(left * p * right);
  for (Index r = 0; r < right; ++r) {
    Eigen::Map<const Matrix> slab(a.data().data() + r * left * nk, left, nk);
    Eigen::Map<Matrix> dst(out.data() + r * left * p, left, p);
    dst.noalias() = slab * ut;
  }
  return Tensor<Scalar>(detail::replace_extent(a.shape(), mode, p), std::move(out));
}

/// [[A; U1, ..., Ud]]: mode products over every mode in order.
template <typename Scalar, typename MatrixT>
Tensor<Scalar> multi_mode_product(const Tensor<Scalar>& a, std::span<const MatrixT> us) {
  if (static_cast<int>(us.size()) != a.order()) {
    throw DimensionError("multi-mode product needs one matrix per mode");
  }
  Tensor<Scalar> out = a;
  for (int k = 0; k < a.order(); ++k) out = mode_product(out, k + 1, us[static_cast<std::size_t>(k)]);
  return out;
}

template <typename Scalar, typename MatrixT>
Tensor<Scalar> multi_mode_product(const Tensor<Scalar>& a, const std::vector<MatrixT>& us) {
  return multi_mode_product(a, std::span<const MatrixT>(us));
}

/// Contract mode `mode` against a vector. Order drops by one; an order-1
/// input yields a 1-element order-1 tensor.
template <typename Scalar, typename Derived>
Tensor<Scalar> contract(const Tensor<Scalar>& a, int mode, const Eigen::MatrixBase<Derived>& v) {
  Tensor<Scalar> t = mode_product(a, mode, v.transpose());
  if (a.order() == 1) return t;
  std::vector<Index> dims = a.shape().dims();
  dims.erase(dims.begin() + (mode - 1));
  return Tensor<Scalar>(Shape(std::move(dims)), t.data());
}

// ---------------------------------------------------------------------------
// Reshaping

template <typename Scalar>
typename Tensor<Scalar>::Matrix matricize(const Tensor<Scalar>& a, int mode) {
  using Matrix = typename Tensor<Scalar>::Matrix;
  detail::check_mode(a.shape(), mode);
  const int k = mode - 1;
  const Index nk = a.shape().dims()[k];
  const Index left = detail::prod_before(a.shape(), k);
  const Index right = detail::prod_after(a.shape(), k);
  Matrix m(nk, left * right);
  for (Index r = 0; r < right; ++r) {
    Eigen::Map<const Matrix> slab(a.data().data() + r * left * nk, left, nk);
    m.middleCols(r * left, left) = slab.transpose();
  }
  return m;
}

/// Inverse of matricize for a target shape.
template <typename Derived>
Tensor<typename Derived::Scalar> fold(const Eigen::MatrixBase<Derived>& m, int mode, const Shape& shape) {
  using Scalar = typename Derived::Scalar;
  using Matrix = typename Tensor<Scalar>::Matrix;
  using Vector = typename Tensor<Scalar>::Vector;
  detail::check_mode(shape, mode);
  const int k = mode - 1;
  const Index nk = shape.dims()[k];
  const Index left = detail::prod_before(shape, k);
  const Index right = detail::prod_after(shape, k);
  if (m.rows() != nk || m.cols() != left * right) throw DimensionError("fold: matrix size does not match shape");
  Vector out(shape.numel());
  for (Index r = 0; r < right; ++r) {
    Eigen::Map<Matrix> dst(out.data() + r * left * nk, left, nk);
    dst = m.middleCols(r * left, left).transpose();
  }
  return Tensor<Scalar>(shape, std::move(out));
}

template <typename Scalar>
typename Tensor<Scalar>::Vector vectorize(const Tensor<Scalar>& a) {
  return a.data();
}

template <typename Derived>
Tensor<typename Derived::Scalar> reshape(const Eigen::MatrixBase<Derived>& v, const Shape& shape) {
  using Vector = typename Tensor<typename Derived::Scalar>::Vector;
  if (v.size() != shape.numel()) throw DimensionError("reshape: element count mismatch");
  Vector flat = Eigen::Map<const Vector>(v.derived().eval().data(), v.size());
  return Tensor<typename Derived::Scalar>(shape, std::move(flat));
}

template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& a, const Shape& shape) {
  if (a.size() != shape.numel()) throw DimensionError("reshape: element count mismatch");
  return Tensor<Scalar>(shape, a.data());
}

// ---------------------------------------------------------------------------
// Kronecker products (standard ordering: the right operand varies fastest)

template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> kronecker_product(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                                                a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> kronecker_power(const Eigen::MatrixBase<Derived>& x,
                                                                            int d) {
  using Vector = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
  if (d < 1) throw DimensionError("Kronecker power needs d >= 1");
  Index len = x.size();
  for (int k = 1; k < d; ++k) {
    if (__builtin_mul_overflow(len, x.size(), &len)) throw DimensionError("Kronecker power length overflows");
  }
  Vector out = x;
  for (int k = 1; k < d; ++k) {
    Vector next(out.size() * x.size());
    for (Index i = 0; i < out.size(); ++i) next.segment(i * x.size(), x.size()) = out[i] * x;
    out = std::move(next);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rank-1 tensors

template <typename Scalar>
struct BasicRank1 {
  using Vector = typename Tensor<Scalar>::Vector;

  std::vector<Vector> vectors;
  Scalar weight = Scalar(1);

  int order() const { return static_cast<int>(vectors.size()); }

  Shape shape() const {
    std::vector<Index> dims;
    dims.reserve(vectors.size());
    for (const auto& v : vectors) dims.push_back(v.size());
    return Shape(std::move(dims));
  }

  Scalar entry(const MultiIndex& idx) const {
    Scalar out = weight;
    for (std::size_t k = 0; k < vectors.size(); ++k) out *= vectors[k][idx[k] - 1];
    return out;
  }
};

using Rank1Tensor = BasicRank1<double>;

template <typename Scalar>
Tensor<Scalar> densify(const BasicRank1<Scalar>& r1) {
  using Vector = typename Tensor<Scalar>::Vector;
  if (r1.vectors.empty()) throw DimensionError("rank-1 tensor needs at least one vector");
  Vector out = r1.weight * r1.vectors.front();
  for (std::size_t k = 1; k < r1.vectors.size(); ++k) {
    const Vector& v = r1.vectors[k];
    Vector next(out.size() * v.size());
    for (Index j = 0; j < v.size(); ++j) next.segment(j * out.size(), out.size()) = v[j] * out;
    out = std::move(next);
  }
  return Tensor<Scalar>(r1.shape(), std::move(out));
}

/// <A, w> by successive contraction of the trailing mode; never forms w densely.
template <typename Scalar>
Scalar inner(const Tensor<Scalar>& a, const BasicRank1<Scalar>& w) {
  using Matrix = typename Tensor<Scalar>::Matrix;
  using Vector = typename Tensor<Scalar>::Vector;
  if (!(a.shape() == w.shape())) throw DimensionError("inner product with rank-1 tensor: shape mismatch");
  Vector cur = a.data();
  for (int k = a.order() - 1; k >= 0; --k) {
    const Vector& v = w.vectors[static_cast<std::size_t>(k)];
    const Index rest = cur.size() / v.size();
    Eigen::Map<const Matrix> m(cur.data(), rest, v.size());
    Vector next = m * v;
    cur = std::move(next);
  }
  return w.weight * cur[0];
}

template <typename Scalar>
Scalar inner(const BasicRank1<Scalar>& w, const Tensor<Scalar>& a) {
  return inner(a, w);
}

}  // namespace tenkit
