#pragma once

// Factored tensor formats and the decompositions that produce them:
// CP (alternating least squares), Tucker/HOSVD, tensor train (TT-SVD plus
// the TT arithmetic needed downstream), TTr1 orthogonal rank-1 expansions,
// and symmetric / partially symmetric CP.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tenkit/op_counter.hpp"
#include "tenkit/tensor.hpp"

namespace tenkit {

// ---------------------------------------------------------------------------
// CP

/// sum_i weights[i] * U1(:,i) o U2(:,i) o ... o Ud(:,i), with unit-norm columns.
struct CPModel {
  Shape shape;
  Vector weights;
  std::vector<Matrix> factors;

  Index rank() const { return weights.size(); }
  int order() const { return static_cast<int>(factors.size()); }
  double entry(const MultiIndex& idx) const;

  /// Rank-1 term i (0-based) as a weighted outer product.
  Rank1Tensor term(Index i) const;

  /// A rank-1 model with zero weight, used for all-zero data.
  static CPModel zero(const Shape& shape);
};

/// Unit-norm columns, non-negative weights, largest-magnitude entry positive
/// in modes 1..d-1, terms sorted by descending weight.
void canonicalize(CPModel& m);

struct CpdConfig {
  int max_iters = 500;
  /// Stop when the relative residual changes by less than this between sweeps.
  double tol = 1e-12;
  int restarts = 1;
  std::uint64_t seed = 0;
};

struct CpdReport {
  double rel_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// A Gram matrix was near-singular and the Tikhonov-regularized solve was used.
  bool regularized = false;
  /// Relative residual after each sweep of the kept run.
  std::vector<double> history;
};

struct CpdResult {
  CPModel model;
  CpdReport report;
};

CpdResult cpd_als(const DenseTensor& a, Index rank, const CpdConfig& cfg = {});

struct IncrementalCpdResult {
  CPModel model;
  CpdReport report;
  Index rank = 0;
  bool target_met = false;
};

/// Smallest rank r <= r_max whose ALS fit reaches target_rel_err.
IncrementalCpdResult cpd_fit_incremental(const DenseTensor& a, double target_rel_err, Index r_max,
                                         const CpdConfig& cfg = {});

/// CP assembled from SVDs of the mode-(1,2) slices, exact up to rounding with
/// rank at most min(n1, n2) * n3 * ... * nd. The smallest terms are dropped
/// while the discarded energy stays within eps * ||A||.
CPModel cp_from_slices(const DenseTensor& a, double eps = 0.0);

// ---------------------------------------------------------------------------
// Symmetric CP

/// sum_i lambda[i] * v_i o v_i o ... o v_i (order-fold).
struct SymmetricCPModel {
  int order = 0;
  Vector lambda;
  Matrix vectors;  // n x r, unit-norm columns

  Index rank() const { return lambda.size(); }
  CPModel to_cp() const;
};

/// Weighted terms lead_i o shared_i o ... o shared_i: modes 2..d share one factor.
struct PartialSymmetricCPModel {
  int order = 0;
  Vector weights;
  Matrix lead;    // n_1 x r
  Matrix shared;  // n x r

  Index rank() const { return weights.size(); }
  CPModel to_cp() const;
};

struct SymmetricCpdResult {
  SymmetricCPModel model;
  CpdReport report;
};

struct PartialSymmetricCpdResult {
  PartialSymmetricCPModel model;
  CpdReport report;
};

/// Max over entries of |a(idx) - a(swap of two adjacent indices)|; cubical input required.
double symmetry_defect(const DenseTensor& a);

/// Same, restricted to permutations of modes first_mode..d.
double symmetry_defect(const DenseTensor& a, int first_mode);

/// Throws ValidationError unless the symmetry defect is within 1e-10.
SymmetricCpdResult cpd_symmetric(const DenseTensor& a, Index rank, const CpdConfig& cfg = {});

/// Requires symmetry in modes 2..d (to 1e-10).
PartialSymmetricCpdResult cpd_partial_symmetric(const DenseTensor& a, Index rank, const CpdConfig& cfg = {});

// ---------------------------------------------------------------------------
// Tucker

struct TuckerModel {
  DenseTensor core;
  std::vector<Matrix> factors;
  /// Set when produced by the HOSVD: core slices are orthogonal and norm-ordered.
  bool hosvd = false;
  /// Per-mode singular values of the unfoldings (HOSVD only).
  std::vector<Vector> mode_singular_values;

  Shape shape() const;
  std::vector<Index> multilinear_rank() const { return core.shape().dims(); }
  double entry(const MultiIndex& idx) const;
};

TuckerModel hosvd(const DenseTensor& a);

struct TuckerResult {
  TuckerModel model;
  double error = 0.0;      // ||A - densify||_F
  double rel_error = 0.0;  // error / ||A||_F
};

TuckerResult tucker_truncate(const DenseTensor& a, const std::vector<Index>& ranks);

/// Frobenius norms of the mode-`mode` slices of a tensor.
Vector slice_norms(const DenseTensor& a, int mode);

// ---------------------------------------------------------------------------
// Tensor train

/// Cores G_k of shape (r_{k-1}, n_k, r_k) with r_0 = r_d = 1.
struct TTModel {
  std::vector<DenseTensor> cores;

  int order() const { return static_cast<int>(cores.size()); }
  Shape shape() const;
  std::vector<Index> ranks() const;
  double entry(const MultiIndex& idx) const;
};

/// TT-SVD with per-step truncation eps * ||A|| / sqrt(d-1), so ||A - TT|| <= eps ||A||.
TTModel tt_svd(const DenseTensor& a, double eps);

/// Recompress: orthogonalize right-to-left, then truncate left-to-right with
/// the same per-step budget relative to the train's norm.
TTModel tt_round(const TTModel& t, double eps);

TTModel tt_sum(const TTModel& a, const TTModel& b);
TTModel tt_scaled(const TTModel& t, double s);
/// Elementwise product; ranks multiply.
TTModel tt_hadamard(const TTModel& a, const TTModel& b);
/// Elementwise product with a rank-1 tensor; ranks unchanged.
TTModel tt_hadamard(const TTModel& a, const Rank1Tensor& w);
TTModel tt_constant(const Shape& shape, double value);

double tt_inner(const TTModel& a, const TTModel& b);

// ---------------------------------------------------------------------------
// TTr1

struct TTr1Term {
  double sigma = 0.0;
  std::vector<Vector> vectors;  // unit norm
};

/// Mutually orthogonal rank-1 terms, sorted by descending sigma.
struct TTr1Model {
  Shape shape;
  std::vector<TTr1Term> terms;

  /// First k terms (the k largest sigmas).
  TTr1Model truncated(std::size_t k) const;
  /// sqrt(sum of squared sigmas beyond the first k).
  double truncation_error(std::size_t k) const;
  CPModel to_cp() const;
};

TTr1Model ttr1_svd(const DenseTensor& a);

// ---------------------------------------------------------------------------
// Reconstruction, storage, factored inner products

DenseTensor densify(const CPModel& m);
DenseTensor densify(const TuckerModel& m);
DenseTensor densify(const TTModel& m);
DenseTensor densify(const TTr1Model& m);
DenseTensor densify(const SymmetricCPModel& m);

/// Stored numbers, weights excluded (CP: sum_k n_k r; Tucker: prod r_k + sum n_k r_k;
/// TT: sum r_{k-1} n_k r_k).
std::int64_t parameter_count(const CPModel& m);
std::int64_t parameter_count(const TuckerModel& m);
std::int64_t parameter_count(const TTModel& m);

/// Closed-form counts for a cubical, uniform-rank layout.
std::int64_t cp_parameter_count(std::int64_t n, std::int64_t d, std::int64_t r);
std::int64_t tucker_parameter_count(std::int64_t n, std::int64_t d, std::int64_t r);
std::int64_t tt_parameter_count(std::int64_t n, std::int64_t d, std::int64_t r);

double factored_inner_rank1(const CPModel& m, const Rank1Tensor& w, OpCounter* ops = nullptr);
double factored_inner_rank1(const TuckerModel& m, const Rank1Tensor& w, OpCounter* ops = nullptr);
double factored_inner_rank1(const TTModel& m, const Rank1Tensor& w, OpCounter* ops = nullptr);

}  // namespace tenkit
