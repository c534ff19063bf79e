#pragma once

// Nonlinear model order reduction of polynomial systems
//   dx/dt = A x + B (x kron x) + C (x kron x kron x) + D (u kron x) + E u
// with the nonlinear coefficient matrices held as CP tensors, projected by
// one-sided Galerkin onto an orthonormal basis V, and simulated in factored
// form. Kronecker products follow the standard ordering, so B's column index
// (i2, i3) maps to tensor modes 2 and 3 with i2 fastest.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tenkit/decomp.hpp"
#include "tenkit/op_counter.hpp"

namespace tenkit {

using InputSignal = std::function<Vector(double)>;

/// Right-hand side and Jacobian of dx/dt = f(x, u).
class Dynamics {
public:
  virtual ~Dynamics() = default;
  virtual Index states() const = 0;
  virtual Index inputs() const = 0;
  Vector rhs(const Vector& x, const Vector& u, OpCounter* ops = nullptr) const;
  Matrix jacobian(const Vector& x, const Vector& u, OpCounter* ops = nullptr) const;

  /// Everything but A x and E u.
  virtual Vector nonlinear_rhs(const Vector& x, const Vector& u, OpCounter* ops = nullptr) const = 0;
  virtual Matrix nonlinear_jacobian(const Vector& x, const Vector& u, OpCounter* ops = nullptr) const = 0;
  virtual const Matrix& a() const = 0;
  virtual const Matrix& e() const = 0;

protected:
  void check_point(const Vector& x, const Vector& u) const;
};

struct PolynomialSystem : Dynamics {
  Index n = 0;
  Index m = 0;
  Matrix A;  // n x n
  Matrix B;  // n x n^2
  Matrix C;  // n x n^3
  Matrix D;  // n x nm
  Matrix E;  // n x m
  InputSignal input;

  /// All coefficient matrices zero with the right shapes.
  static PolynomialSystem zeros(Index n, Index m);
  void validate() const;

  Index states() const override { return n; }
  Index inputs() const override { return m; }
  Vector nonlinear_rhs(const Vector& x, const Vector& u, OpCounter* ops = nullptr) const override;
  /// B (I kron x + x kron I) + C (I kron x kron x + ...) + D (u kron I), formed explicitly.
  Matrix nonlinear_jacobian(const Vector& x, const Vector& u, OpCounter* ops = nullptr) const override;
  const Matrix& a() const override { return A; }
  const Matrix& e() const override { return E; }
};

/// sum_i w_i a_i (s_i1^T x) ... (s_ik^T x) [ (t_i^T u) ]: mode 1 is the
/// output, then the state modes, then the input mode for bilinear terms.
struct FactoredTerm {
  enum class Kind { quadratic, cubic, bilinear };
  Kind kind = Kind::quadratic;
  CPModel cp;
  /// All state modes carry the same factor.
  bool shared = false;
  /// ||densify(cp) - source|| / ||source|| at tensorization.
  double fit_error = 0.0;

  int state_modes() const;
  Index rank() const { return cp.rank(); }
  /// Factor entries plus weights, counting a shared factor once.
  std::int64_t storage() const;
};

struct FactoredSystem : Dynamics {
  Matrix A;
  Matrix E;
  std::vector<FactoredTerm> terms;
  InputSignal input;

  Index states() const override { return A.rows(); }
  Index inputs() const override { return E.cols(); }
  Vector nonlinear_rhs(const Vector& x, const Vector& u, OpCounter* ops = nullptr) const override;
  Matrix nonlinear_jacobian(const Vector& x, const Vector& u, OpCounter* ops = nullptr) const override;
  const Matrix& a() const override { return A; }
  const Matrix& e() const override { return E; }

  const FactoredTerm* term(FactoredTerm::Kind kind) const;
  std::int64_t nonlinear_storage() const;
};

struct TensorizedSystem : FactoredSystem {
  bool symmetric = false;
  /// Every term met the requested accuracy.
  bool fit_ok = true;
  std::vector<std::string> warnings;
};

struct TensorizeOptions {
  /// Fixed CP ranks; a missing entry means "smallest rank meeting eps".
  std::optional<Index> rank_b, rank_c, rank_d;
  double eps = 1e-8;
  /// Largest rank tried by ALS before the exact slice construction takes over.
  Index als_max_rank = 0;  // 0: state dimension
  /// Symmetrize over the state modes and share one factor across them.
  bool symmetric = false;
  CpdConfig cpd;
};

TensorizedSystem tensorize(const PolynomialSystem& sys, const TensorizeOptions& opts = {});

/// Dense matrices of a factored system; the CP-approximated model in
/// Kronecker form.
PolynomialSystem to_dense(const FactoredSystem& sys);

struct ReducedSystem : FactoredSystem {
  Matrix V;
  /// Largest relative gap between the factored reduced rhs and V^T rhs(V x).
  double galerkin_defect = 0.0;
};

ReducedSystem reduce(const TensorizedSystem& sys, const Matrix& v);

/// Matrix-based reduction: V^T B (V kron V) and so on.
PolynomialSystem project_dense(const PolynomialSystem& sys, const Matrix& v);

enum class Integrator { rk4, implicit_euler };

struct SimulationOptions {
  double t0 = 0.0;
  double t_end = 1.0;
  double dt = 1e-2;
  Integrator integrator = Integrator::rk4;
  double newton_tol = 1e-10;
  int newton_max_iters = 50;
};

struct Trajectory {
  std::vector<double> t;
  Matrix x;  // states x samples
};

Trajectory simulate(const Dynamics& sys, const InputSignal& u, const Vector& x0, const SimulationOptions& opts);

struct Projection {
  Matrix V;
  Vector singular_values;
  std::string warning;
};

/// POD: leading left singular vectors of the training trajectory.
Projection build_projection(const Dynamics& sys, const InputSignal& u, const Vector& x0, const SimulationOptions& opts,
                            Index q);

struct Complexity {
  std::int64_t rhs_linear = 0;
  std::int64_t rhs_nonlinear = 0;
  std::int64_t jacobian_linear = 0;
  std::int64_t jacobian_nonlinear = 0;
  std::int64_t storage_nonlinear = 0;
};

Complexity complexity_report(const FactoredSystem& sys, const Vector& x, const Vector& u);
Complexity complexity_report(const PolynomialSystem& sys, const Vector& x, const Vector& u);

struct BenchRow {
  Index q = 0;
  Index r = 0;
  Complexity factored;
  Complexity symmetric;
  Complexity dense;
};

/// Random reduced cubic models of each size q with CP rank r, counted in
/// factored, shared-factor and dense Kronecker form.
std::vector<BenchRow> complexity_bench(const std::vector<Index>& qs, Index r, Index m, std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace tenkit
