#include <algorithm>
#include <cmath>

#include "tenkit/decomp.hpp"
#include "tenkit/error.hpp"
#include "tenkit/linalg.hpp"

namespace tenkit {

CPModel cp_from_slices(const DenseTensor& a, double eps) {
  if (a.order() < 2) throw DimensionError("slice CP needs order >= 2");
  if (!(eps >= 0.0)) throw ValidationError("eps must be non-negative");
  const Shape& s = a.shape();
  const Index n1 = s.extent(1), n2 = s.extent(2);
  const Index slices = a.size() / (n1 * n2);
  struct Piece {
    double sigma;
    Index slice;
    Vector u, v;
  };
  std::vector<Piece> pieces;
  for (Index c = 0; c < slices; ++c) {
    const Matrix m = Eigen::Map<const Matrix>(a.data().data() + c * n1 * n2, n1, n2);
    if (m.norm() == 0.0) continue;
    const linalg::Svd svd = linalg::thin_svd(m);
    for (Index k = 0; k < svd.s.size(); ++k)
      if (svd.s[k] > 0.0) pieces.push_back({svd.s[k], c, svd.u.col(k), svd.v.col(k)});
  }
  if (pieces.empty()) return CPModel::zero(s);
  std::stable_sort(pieces.begin(), pieces.end(), [](const Piece& x, const Piece& y) { return x.sigma > y.sigma; });
  const double budget = std::pow(eps * frobenius_norm(a), 2);
  double dropped = 0.0;
  while (pieces.size() > 1 && dropped + pieces.back().sigma * pieces.back().sigma <= budget) {
    dropped += pieces.back().sigma * pieces.back().sigma;
    pieces.pop_back();
  }
  const auto r = static_cast<Index>(pieces.size());
  CPModel m;
  m.shape = s;
  m.weights.resize(r);
  for (int k = 1; k <= s.order(); ++k) m.factors.push_back(Matrix::Zero(s.extent(k), r));
  for (Index j = 0; j < r; ++j) {
    const Piece& p = pieces[static_cast<std::size_t>(j)];
    m.weights[j] = p.sigma;
    m.factors[0].col(j) = p.u;
    m.factors[1].col(j) = p.v;
    Index rest = p.slice;
    for (int k = 3; k <= s.order(); ++k) {
      m.factors[static_cast<std::size_t>(k - 1)](rest % s.extent(k), j) = 1.0;
      rest /= s.extent(k);
    }
  }
  return m;
}

}  // namespace tenkit
