// Discrete Stieltjes procedure for the distribution of y = surrogate(xi)
// under the grid's product weights. The monic polynomials p_k(y) live as
// tensor trains on the grid, and every expectation E[f] = <F, W> is a TT
// contraction with the rank-1 weight tensor W.

#include <cmath>

#include "tenkit/error.hpp"
#include "tenkit/uq.hpp"

namespace tenkit {

namespace {

/// E_W[a * b] for TT tensors a, b.
double weighted_inner(const TTModel& a, const TTModel& b, const Rank1Tensor& w) {
  return tt_inner(a, tt_hadamard(b, w));
}

}  // namespace

Vector tt_moments(const TTModel& y, const Rank1Tensor& weights, int count, double round_eps) {
  if (count < 1) throw ValidationError("moment count must be positive");
  Vector m(count);
  TTModel power = y;
  for (int j = 1; j <= count; ++j) {
    m[j - 1] = factored_inner_rank1(power, weights);
    if (j < count) power = tt_round(tt_hadamard(power, y), round_eps);
  }
  return m;
}

HierarchicalResult hierarchical_basis(const GpcExpansion& surrogate, const QuadratureGrid& grid, Index n_new,
                                      const HierarchicalConfig& cfg) {
  if (n_new < 1) throw ValidationError("requested basis size must be positive");
  if (surrogate.dims() != grid.dims()) throw DimensionError("surrogate and grid differ in dimension");
  if (!(cfg.eps_tt >= 0.0)) throw ValidationError("eps_tt must be non-negative");

  HierarchicalResult out;
  TTModel y;
  if (cfg.builder) {
    y = cfg.builder(surrogate, grid);
  } else {
    const DenseTensor dense = gpc_on_grid(surrogate, grid);
    y = tt_svd(dense, cfg.eps_tt);
    const double norm = frobenius_norm(dense);
    out.tt_rel_error = norm > 0 ? (dense.data() - densify(y).data()).norm() / norm : 0.0;
    if (out.tt_rel_error > cfg.eps_tt * (1.0 + 1e-8) + 1e-14) {
      throw NumericalError("TT compression error " + std::to_string(out.tt_rel_error) + " exceeds eps_tt");
    }
  }
  if (!(y.shape() == grid.shape())) throw DimensionError("TT builder returned a tensor of the wrong shape");
  out.tt_ranks = y.ranks();

  const Rank1Tensor w = grid.weight_tensor();
  Vector alpha(n_new), beta(n_new);
  TTModel p = tt_constant(grid.shape(), 1.0);
  TTModel p_prev;
  double norm = weighted_inner(p, p, w);
  double norm_prev = 0.0;
  beta[0] = norm;
  Index degree = 0;
  for (Index k = 0; k < n_new; ++k) {
    const TTModel yp = tt_round(tt_hadamard(y, p), cfg.round_eps);
    alpha[k] = weighted_inner(yp, p, w) / norm;
    if (k > 0) beta[k] = norm / norm_prev;
    degree = k + 1;
    if (k + 1 == n_new) break;

    TTModel next = tt_sum(yp, tt_scaled(p, -alpha[k]));
    if (k > 0) next = tt_sum(next, tt_scaled(p_prev, -beta[k]));
    next = tt_round(next, cfg.round_eps);
    const double next_norm = weighted_inner(next, next, w);
    const double reference = weighted_inner(yp, yp, w);
    if (next_norm < -1e-12 * reference) {
      throw NumericalError("Stieltjes breakdown: non-positive norm for the degree-" + std::to_string(k + 1) +
                           " polynomial");
    }
    if (next_norm <= 1e-20 * reference) break;  // the discrete measure has only k+1 support points
    p_prev = std::move(p);
    p = std::move(next);
    norm_prev = norm;
    norm = next_norm;
  }
  out.degree = degree;
  out.recurrence.alpha = alpha.head(degree);
  out.recurrence.beta = beta.head(degree);
  out.rule = golub_welsch(out.recurrence, degree);
  return out;
}

}  // namespace tenkit
