// Sum-of-nuclear-norms completion by ADMM with one auxiliary tensor per mode
// (singular-value thresholding of each unfolding) and the observations kept
// as hard constraints on the shared iterate.

#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "tenkit/completion.hpp"
#include "tenkit/error.hpp"
#include "tenkit/linalg.hpp"
#include "tenkit/random.hpp"

namespace tenkit {

namespace {

Matrix shrink_singular_values(const Matrix& m, double tau) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector s = (svd.singularValues().array() - tau).max(0.0).matrix();
  Index keep = 0;
  while (keep < s.size() && s[keep] > 0) ++keep;
  if (keep == 0) return Matrix::Zero(m.rows(), m.cols());
  return svd.matrixU().leftCols(keep) * s.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).transpose();
}

double nuclear_norm(const Matrix& m) { return Eigen::BDCSVD<Matrix>(m).singularValues().sum(); }

double weighted_objective(const DenseTensor& x, const std::vector<double>& alpha) {
  double total = 0.0;
  for (int k = 1; k <= x.order(); ++k) total += alpha[static_cast<std::size_t>(k - 1)] * nuclear_norm(matricize(x, k));
  return total;
}

}  // namespace

NuclearResult complete_nuclear(const SampleSet& samples, std::vector<double> alpha, const NuclearConfig& cfg) {
  const Shape& shape = samples.shape();
  const int d = shape.order();
  if (d > 4 || shape.numel() > 1'000'000) {
    throw ScaleError("nuclear-norm completion keeps a dense iterate and is limited to order <= 4 and 1e6 entries (got " +
                     shape.to_string() + "); its cost grows exponentially with the order");
  }
  if (alpha.empty()) alpha.assign(static_cast<std::size_t>(d), 1.0 / d);
  if (static_cast<int>(alpha.size()) != d) throw ValidationError("need one nuclear-norm weight per mode");
  double alpha_sum = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0)) throw ValidationError("nuclear-norm weights must be non-negative");
    alpha_sum += a;
  }
  if (std::abs(alpha_sum - 1.0) > 1e-12) throw ValidationError("nuclear-norm weights must sum to 1");

  const Index numel = shape.numel();
  std::vector<Index> observed;
  for (const auto& idx : samples.indices()) observed.push_back(linear_index(shape, idx));
  const Vector& values = samples.values();

  Vector x = Vector::Zero(numel);
  if (cfg.random_start) {
    Rng rng(cfg.seed);
    const double rms = values.norm() / std::sqrt(static_cast<double>(values.size()));
    x = rms * rng.normal_vector(numel);
  }
  for (std::size_t j = 0; j < observed.size(); ++j) x[observed[j]] = values[static_cast<Index>(j)];

  NuclearResult out;
  std::vector<Vector> y(static_cast<std::size_t>(d), Vector::Zero(numel));
  double sigma_max = 0.0;
  for (int k = 1; k <= d; ++k) {
    sigma_max = std::max(sigma_max, linalg::thin_svd(matricize(DenseTensor(shape, x), k)).s[0]);
  }
  if (sigma_max == 0.0) {
    out.x = DenseTensor(shape);
    out.objective = {0.0};
    out.observed_residual = {0.0};
    out.converged = true;
    return out;
  }
  // Start with a threshold above the largest singular value and tighten it geometrically.
  const double rho0 = 0.1 / sigma_max;
  const double rho_max = 1e8 * rho0;
  const double growth = 1.02;
  double rho = rho0;

  auto record = [&](const Vector& v) {
    const DenseTensor xt(shape, v);
    out.objective.push_back(weighted_objective(xt, alpha));
    out.observed_residual.push_back(residual_omega(xt, samples));
  };
  record(x);
  for (int it = 1; it <= cfg.max_iters; ++it) {
    std::vector<Vector> m(static_cast<std::size_t>(d));
    Vector next = Vector::Zero(numel);
    for (int k = 1; k <= d; ++k) {
      const auto kk = static_cast<std::size_t>(k - 1);
      const DenseTensor shifted(shape, x + y[kk] / rho);
      const Matrix thr = shrink_singular_values(matricize(shifted, k), alpha[kk] / rho);
      m[kk] = fold(thr, k, shape).data();
      next += m[kk] - y[kk] / rho;
    }
    next /= static_cast<double>(d);
    for (std::size_t j = 0; j < observed.size(); ++j) next[observed[j]] = values[static_cast<Index>(j)];
    double gap = 0.0;
    for (int k = 0; k < d; ++k) {
      y[k] += rho * (next - m[k]);
      gap = std::max(gap, (next - m[k]).norm());
    }
    if (!next.allFinite()) throw NumericalError("nuclear-norm ADMM produced non-finite values at iteration " + std::to_string(it));
    const double change = (next - x).norm() / std::max(next.norm(), 1e-300);
    x = std::move(next);
    record(x);
    out.iterations = it;
    if (change < cfg.tol && gap < cfg.tol * std::max(x.norm(), 1e-300)) {
      out.converged = true;
      break;
    }
    rho = std::min(rho * growth, rho_max);
  }
  out.x = DenseTensor(shape, x);
  return out;
}

}  // namespace tenkit
