#pragma once

// Tensor completion from a set of observed entries: fixed-rank alternating
// minimization, low-rank plus sparse-transform regularization, and a
// sum-of-nuclear-norms ADMM for low-order dense problems.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tenkit/decomp.hpp"

namespace tenkit {

/// Observed entries (Omega) of a tensor with the given shape. Indices are
/// validated and must be distinct.
class SampleSet {
public:
  SampleSet(Shape shape, std::vector<MultiIndex> indices, Vector values);

  const Shape& shape() const { return shape_; }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const Vector& values() const { return values_; }
  Index size() const { return values_.size(); }

  /// Subset by positions into this set.
  SampleSet subset(const std::vector<Index>& positions) const;

private:
  Shape shape_;
  std::vector<MultiIndex> indices_;
  Vector values_;
};

SampleSet project_omega(const DenseTensor& a, const std::vector<MultiIndex>& omega);

/// All indices of a shape in storage order.
std::vector<MultiIndex> all_indices(const Shape& shape);

/// ||P_Omega(X - A)||_F, evaluating X only at the sampled indices.
double residual_omega(const CPModel& x, const SampleSet& samples);
double residual_omega(const DenseTensor& x, const SampleSet& samples);

/// CSV with d one-based index columns followed by the value column.
void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples);
SampleSet read_samples_csv(const std::filesystem::path& path, const Shape& shape);

struct CompletionConfig {
  int max_iters = 500;
  /// Stop when the relative objective change drops below this.
  double tol = 1e-8;
  std::uint64_t seed = 0;
  /// Worker threads for the row solves of one factor update.
  int threads = 1;
  /// Independent unpenalized ALS starts; the lowest-objective one seeds the solve.
  int restarts = 1;
};

struct CompletionReport {
  /// Objective after each outer iteration (index 0 is the initial value).
  std::vector<double> objective;
  /// ||P_Omega(X - A)||_F after each outer iteration.
  std::vector<double> observed_residual;
  /// ||U_new - U_old||_F / ||U_old||_F summed over modes, per iteration.
  std::vector<double> factor_change;
  int iterations = 0;
  bool converged = false;
  /// Fewer samples than rank * sum(n_k).
  bool underdetermined = false;
};

struct CompletionResult {
  CPModel model;
  CompletionReport report;
};

CompletionResult complete_fixed_rank(const SampleSet& samples, Index rank, const CompletionConfig& cfg = {});

struct LrSparseProblem {
  SampleSet samples;
  std::vector<Rank1Tensor> transforms;
  double lambda = 0.0;
  Index rank = 1;
};

struct LrSparseResult {
  CPModel model;
  /// z_k = <X, W_k>, computed from the factors.
  Vector coefficients;
  CompletionReport report;
  /// Number of |z_k| above z_tol = 1e-6 * max |z|.
  Index sparsity = 0;
};

/// min 0.5 ||P_Omega(X - A)||^2 + lambda sum_k |<X, W_k>| over CP-rank-r X.
LrSparseResult complete_lr_sparse(const LrSparseProblem& problem, const CompletionConfig& cfg = {});

struct LambdaScore {
  double lambda = 0.0;
  double heldout_rms = 0.0;
};

struct LambdaSelection {
  double best = 0.0;
  std::vector<LambdaScore> scores;
};

/// Scores each lambda by the RMS error on a held-out fraction of the samples.
LambdaSelection select_lambda(const LrSparseProblem& problem, const std::vector<double>& grid,
                              double holdout_fraction, const CompletionConfig& cfg = {});

/// Logarithmic grid lo, ..., hi with `count` points.
std::vector<double> log_grid(double lo, double hi, int count);

struct NuclearConfig {
  int max_iters = 3000;
  /// Stop when the relative change of the iterate drops below this.
  double tol = 1e-10;
  /// Unobserved entries start at zero unless a random start is requested.
  bool random_start = false;
  std::uint64_t seed = 0;
};

struct NuclearResult {
  DenseTensor x;
  /// sum_k alpha_k ||X_(k)||_* per iteration.
  std::vector<double> objective;
  std::vector<double> observed_residual;
  int iterations = 0;
  bool converged = false;
};

/// Weighted sum of nuclear norms with the samples as equality constraints.
/// Order <= 4 and at most 1e6 entries; alpha must sum to one (empty = 1/d each).
NuclearResult complete_nuclear(const SampleSet& samples, std::vector<double> alpha = {},
                               const NuclearConfig& cfg = {});

}  // namespace tenkit
