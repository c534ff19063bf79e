#include <algorithm>
#include <cmath>

#include "tenkit/decomp.hpp"
#include "tenkit/linalg.hpp"

namespace tenkit {

namespace {

/// Splits `data` (remaining modes k..d-1, first fastest) by an SVD of its
/// mode-k reshaping and recurses on each right singular vector.
void expand(const Vector& data, const std::vector<Index>& dims, std::size_t k, double sigma,
            std::vector<Vector>& prefix, std::vector<TTr1Term>& out) {
  const Index n = dims[k];
  Eigen::Map<const Matrix> m(data.data(), n, data.size() / n);
  linalg::Svd svd = linalg::thin_svd(m);
  const Index rank = linalg::numerical_rank(svd.s, m.rows(), m.cols());
  const bool last_split = k + 2 == dims.size();
  for (Index j = 0; j < rank; ++j) {
    prefix.push_back(svd.u.col(j));
    if (last_split) {
      TTr1Term t;
      t.sigma = sigma * svd.s[j];
      t.vectors = prefix;
      t.vectors.push_back(svd.v.col(j));
      out.push_back(std::move(t));
    } else {
      expand(svd.v.col(j), dims, k + 1, sigma * svd.s[j], prefix, out);
    }
    prefix.pop_back();
  }
}

}  // namespace

TTr1Model ttr1_svd(const DenseTensor& a) {
  TTr1Model out;
  out.shape = a.shape();
  const double norm = frobenius_norm(a);
  if (a.order() == 1) {
    TTr1Term t;
    t.sigma = norm;
    Vector v = a.data();
    if (norm > 0) {
      v /= norm;
    } else {
      v.setZero();
      v[0] = 1.0;
    }
    t.vectors.push_back(std::move(v));
    out.terms.push_back(std::move(t));
    return out;
  }
  if (norm > 0) {
    std::vector<Vector> prefix;
    expand(a.data(), a.shape().dims(), 0, 1.0, prefix, out.terms);
  }
  if (out.terms.empty()) {
    TTr1Term t;
    for (Index n : a.shape().dims()) {
      Vector e = Vector::Zero(n);
      e[0] = 1.0;
      t.vectors.push_back(std::move(e));
    }
    out.terms.push_back(std::move(t));
  }
  std::stable_sort(out.terms.begin(), out.terms.end(),
                   [](const TTr1Term& x, const TTr1Term& y) { return x.sigma > y.sigma; });
  return out;
}

TTr1Model TTr1Model::truncated(std::size_t k) const {
  TTr1Model out;
  out.shape = shape;
  out.terms.assign(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(std::min(k, terms.size())));
  return out;
}

double TTr1Model::truncation_error(std::size_t k) const {
  double tail = 0.0;
  for (std::size_t i = k; i < terms.size(); ++i) tail += terms[i].sigma * terms[i].sigma;
  return std::sqrt(tail);
}

CPModel TTr1Model::to_cp() const {
  CPModel m;
  m.shape = shape;
  const Index r = static_cast<Index>(terms.size());
  m.weights.resize(r);
  for (Index n : shape.dims()) m.factors.push_back(Matrix(n, r));
  for (Index i = 0; i < r; ++i) {
    m.weights[i] = terms[static_cast<std::size_t>(i)].sigma;
    for (std::size_t k = 0; k < m.factors.size(); ++k) m.factors[k].col(i) = terms[static_cast<std::size_t>(i)].vectors[k];
  }
  return m;
}

DenseTensor densify(const TTr1Model& m) { return densify(m.to_cp()); }

}  // namespace tenkit
