#pragma once

// Stochastic collocation with generalized polynomial chaos: tensor-product
// Gauss grids, quadrature weight tensors, full-grid and tensor-recovery
// coefficient computation, and hierarchical basis construction through a
// tensor-train surrogate.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tenkit/completion.hpp"
#include "tenkit/decomp.hpp"
#include "tenkit/quadrature.hpp"

namespace tenkit {

/// Independent parameters xi_k with their quadrature sizes.
struct ParamSpec {
  std::vector<Measure> measures;
  std::vector<Index> sizes;

  static ParamSpec uniform_sizes(std::vector<Measure> measures, Index n);
  int dims() const { return static_cast<int>(measures.size()); }
};

class QuadratureGrid {
public:
  explicit QuadratureGrid(std::vector<GaussRule> rules);

  int dims() const { return static_cast<int>(rules_.size()); }
  const std::vector<GaussRule>& rules() const { return rules_; }
  Shape shape() const;
  /// Parameter point at a 1-based grid index.
  Vector point(const MultiIndex& idx) const;
  /// Product of the per-dimension weights as a rank-1 tensor.
  Rank1Tensor weight_tensor() const;

private:
  std::vector<GaussRule> rules_;
};

QuadratureGrid build_quadrature(const ParamSpec& spec);

/// Multi-indices with total degree <= p, ordered by degree and then
/// lexicographically with larger leading entries first.
std::vector<std::vector<int>> total_degree_set(int d, int p);

/// Per-dimension vectors w_k(i) * psi_{alpha_k}(xi_k^i); <Y, W_alpha> is the
/// quadrature estimate of E[Psi_alpha y].
Rank1Tensor weight_tensor(const QuadratureGrid& grid, const std::vector<Measure>& measures,
                          const std::vector<int>& alpha);

struct GpcExpansion {
  std::vector<Measure> measures;
  int order = 0;
  std::vector<std::vector<int>> multi_indices;
  Vector coefficients;

  int dims() const { return static_cast<int>(measures.size()); }
};

GpcExpansion make_expansion(std::vector<Measure> measures, int order);

double gpc_eval(const GpcExpansion& exp, const Vector& xi);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

Moments gpc_moments(const GpcExpansion& exp);

/// Draws xi from the product measure and evaluates the expansion.
Vector gpc_sample(const GpcExpansion& exp, Index count, std::uint64_t seed);

/// Tensor of expansion values on a grid, accumulated term by term.
DenseTensor gpc_on_grid(const GpcExpansion& exp, const QuadratureGrid& grid);

/// Stand-in for a circuit simulator: maps a parameter point to a scalar.
class SampleOracle {
public:
  virtual ~SampleOracle() = default;
  virtual double evaluate(const Vector& xi) const = 0;
  /// True if evaluate() may be called from several threads at once.
  virtual bool concurrent_safe() const { return false; }
  /// Points are columns. Results are keyed by column, so the order in which
  /// concurrent evaluations finish does not matter.
  virtual Vector evaluate_batch(const Matrix& points, int threads) const;
};

class FunctionOracle : public SampleOracle {
public:
  FunctionOracle(std::function<double(const Vector&)> f, bool concurrent_safe)
      : f_(std::move(f)), safe_(concurrent_safe) {}
  double evaluate(const Vector& xi) const override { return f_(xi); }
  bool concurrent_safe() const override { return safe_; }

private:
  std::function<double(const Vector&)> f_;
  bool safe_;
};

/// Largest full grid collocate_full will evaluate.
inline constexpr double kFullGridBudget = 1e6;

struct CollocationOptions {
  int threads = 1;
};

GpcExpansion collocate_full(const SampleOracle& oracle, const ParamSpec& spec, int order,
                            const CollocationOptions& opts = {});

struct RecoveryConfig {
  Index rank = 4;
  double lambda = 1e-6;
  /// Extra grid points (not used for fitting) for a held-out error estimate.
  Index holdout = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  CompletionConfig completion{.restarts = 8};
};

struct RecoveryDiagnostics {
  std::vector<double> objective;
  std::vector<double> factor_change;
  /// Relative error of the completed tensor on held-out points (if any).
  std::optional<double> heldout_rel_error;
  Index sparsity = 0;
  bool converged = false;
  /// 1-based grid indices queried for fitting, in draw order.
  std::vector<MultiIndex> sample_indices;
  std::vector<MultiIndex> holdout_indices;
};

struct RecoveryResult {
  GpcExpansion expansion;
  RecoveryDiagnostics diagnostics;
};

RecoveryResult collocate_tensor_recovery(const SampleOracle& oracle, const ParamSpec& spec, int order, Index budget,
                                         const RecoveryConfig& cfg = {});

/// Largest |F_a - F_b| between empirical distribution functions.
double ks_distance(Vector a, Vector b);

struct Histogram {
  Vector edges;    // bins + 1
  Vector density;  // normalized to unit area
};

Histogram histogram(const Vector& samples, int bins);

struct HierarchicalConfig {
  double eps_tt = 1e-12;
  /// Relative accuracy kept when recompressing intermediate polynomials.
  double round_eps = 1e-13;
  /// Replaces the default dense-evaluation-plus-TT-SVD builder.
  std::function<TTModel(const GpcExpansion&, const QuadratureGrid&)> builder;
};

struct HierarchicalResult {
  Recurrence recurrence;
  GaussRule rule;
  /// Number of polynomials produced; smaller than requested if the
  /// discrete measure of y has fewer support points.
  Index degree = 0;
  std::vector<Index> tt_ranks;
  double tt_rel_error = 0.0;
};

/// Orthonormal basis and Gauss rule for y = surrogate(xi) by the discrete
/// Stieltjes procedure, with every expectation evaluated in TT form.
HierarchicalResult hierarchical_basis(const GpcExpansion& surrogate, const QuadratureGrid& grid, Index n_new,
                                      const HierarchicalConfig& cfg = {});

/// E[y^j] for j = 1..count, from a TT representation of y on a grid.
Vector tt_moments(const TTModel& y, const Rank1Tensor& weights, int count, double round_eps = 1e-13);

}  // namespace tenkit
