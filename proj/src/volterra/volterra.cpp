#include "tenkit/volterra.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>

#include <unsupported/Eigen/FFT>

#include "tenkit/error.hpp"
#include "tenkit/parallel.hpp"

namespace tenkit {

namespace {

Index fft_length(Index n) {
  Index l = 2;
  while (l < n) l *= 2;
  return l;
}

/// Lagged convolution (a * u)[k] = sum_m a[m] u[k-m], m = 1..M, for k = 1..K,
/// given the spectrum of the zero-padded input.
Vector lagged(Eigen::FFT<double>& fft, const Vector& a, const std::vector<std::complex<double>>& u_hat, Index len, Index k) {
  std::vector<double> pa(static_cast<std::size_t>(len), 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::vector<std::complex<double>> a_hat;
  fft.fwd(a_hat, pa);
  for (std::size_t i = 0; i < a_hat.size(); ++i) a_hat[i] *= u_hat[i];
  std::vector<double> c;
  fft.inv(c, a_hat);
  Vector out = Vector::Zero(k);
  for (Index j = 1; j < k; ++j) out[j] = c[static_cast<std::size_t>(j - 1)];
  return out;
}

template <typename F>
double median_seconds(int runs, F&& f) {
  std::vector<double> t;
  for (int i = 0; i < runs; ++i) {
    const auto start = std::chrono::steady_clock::now();
    f();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

}  // namespace

void VolterraKernel3::validate() const {
  if (h.order() != 3) throw DimensionError("third-order Volterra kernel must be a 3-way tensor");
  const Index m = h.shape().extent(1);
  if (h.shape().extent(2) != m || h.shape().extent(3) != m) throw DimensionError("Volterra kernel must be M x M x M");
  if (!h.data().allFinite()) throw ValidationError("Volterra kernel has non-finite entries");
  if (!(dt > 0.0)) throw ValidationError("sample period must be positive");
}

VolterraKernel3 lowpass_kernel(Index memory, double tau, double dt) {
  if (memory < 1 || !(tau > 0.0)) throw ValidationError("kernel needs M >= 1 and tau > 0");
  Vector v(memory * memory * memory);
  Index off = 0;
  for (Index m3 = 1; m3 <= memory; ++m3)
    for (Index m2 = 1; m2 <= memory; ++m2)
      for (Index m1 = 1; m1 <= memory; ++m1) {
        const double s = static_cast<double>(m1 + m2 + m3);
        v[off++] = std::exp(-s / tau) / s;
      }
  return {DenseTensor(Shape({memory, memory, memory}), std::move(v)), dt};
}

FactoredKernel3 factor_kernel(const VolterraKernel3& kernel, Index rank, const CpdConfig& cfg) {
  kernel.validate();
  if (rank < 1) throw ValidationError("kernel rank must be at least 1");
  const Index m = kernel.memory();
  FactoredKernel3 out;
  out.dt = kernel.dt;
  out.cp = rank >= m * m ? cp_from_slices(kernel.h) : cpd_als(kernel.h, rank, cfg).model;
  const double nh = frobenius_norm(kernel.h);
  const double err = (densify(out.cp).data() - kernel.h.data()).norm();
  out.fit_error = nh > 0 ? err / nh : err;
  return out;
}

Vector direct_response(const VolterraKernel3& kernel, const Vector& u) {
  kernel.validate();
  const Index m = kernel.memory();
  const Index k = u.size();
  const double* h = kernel.h.data().data();
  Vector y = Vector::Zero(k);
  Vector w(m);
  for (Index t = 0; t < k; ++t) {
    // w[p] = u at 1-based time (t+1) - (p+1).
    for (Index p = 0; p < m; ++p) w[p] = t - 1 - p >= 0 ? u[t - 1 - p] : 0.0;
    double acc = 0.0;
    for (Index p3 = 0; p3 < m; ++p3)
      for (Index p2 = 0; p2 < m; ++p2)
        for (Index p1 = 0; p1 < m; ++p1) acc += h[p1 + m * (p2 + m * p3)] * w[p1] * w[p2] * w[p3];
    y[t] = acc;
  }
  return y;
}

Vector factored_response(const FactoredKernel3& kernel, const Vector& u, int threads) {
  if (kernel.cp.order() != 3) throw DimensionError("factored kernel must be a 3-way CP model");
  const Index k = u.size();
  if (k == 0) return Vector();
  const Index len = fft_length(k + kernel.memory() - 1);
  std::vector<double> pu(static_cast<std::size_t>(len), 0.0);
  std::copy(u.begin(), u.end(), pu.begin());
  std::vector<std::complex<double>> u_hat;
  {
    Eigen::FFT<double> fft;
    fft.fwd(u_hat, pu);
  }
  const Index r = kernel.rank();
  Matrix terms(k, r);
  parallel_for(static_cast<long>(r), threads, [&](long i) {
    Eigen::FFT<double> fft;
    Vector prod = Vector::Constant(k, kernel.cp.weights[i]);
    for (int mode = 0; mode < 3; ++mode) {
      prod = prod.cwiseProduct(lagged(fft, kernel.cp.factors[static_cast<std::size_t>(mode)].col(i), u_hat, len, k));
    }
    terms.col(i) = prod;
  });
  Vector y = Vector::Zero(k);
  for (Index i = 0; i < r; ++i) y += terms.col(i);
  return y;
}

Vector fft_convolve(const Vector& a, const Vector& b) {
  if (a.size() == 0 || b.size() == 0) return Vector();
  const Index n = a.size() + b.size() - 1;
  const Index len = fft_length(n);
  std::vector<double> pa(static_cast<std::size_t>(len), 0.0), pb(static_cast<std::size_t>(len), 0.0);
  std::copy(a.begin(), a.end(), pa.begin());
  std::copy(b.begin(), b.end(), pb.begin());
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> fa, fb;
  fft.fwd(fa, pa);
  fft.fwd(fb, pb);
  for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  std::vector<double> c;
  fft.inv(c, fa);
  return Eigen::Map<const Vector>(c.data(), n);
}

Vector direct_convolve(const Vector& a, const Vector& b) {
  if (a.size() == 0 || b.size() == 0) return Vector();
  Vector c = Vector::Zero(a.size() + b.size() - 1);
  for (Index i = 0; i < a.size(); ++i)
    for (Index j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

std::vector<TradeoffRow> tradeoff_report(const VolterraKernel3& kernel, const Vector& u, const std::vector<Index>& ranks,
                                         const TradeoffOptions& opts) {
  if (ranks.empty()) throw ValidationError("trade-off report needs at least one rank");
  if (opts.runs < 1) throw ValidationError("timing needs at least one run");
  const Vector ref = direct_response(kernel, u);
  const double direct_time = median_seconds(opts.runs, [&] { (void)direct_response(kernel, u); });
  const double ref_norm = ref.norm();
  std::vector<TradeoffRow> rows;
  for (Index r : ranks) {
    const FactoredKernel3 fk = factor_kernel(kernel, r, opts.cpd);
    TradeoffRow row;
    row.rank = fk.rank();
    row.kernel_fit_error = fk.fit_error;
    const Vector y = factored_response(fk, u);
    row.response_rel_error = ref_norm > 0 ? (y - ref).norm() / ref_norm : y.norm();
    row.direct_seconds = direct_time;
    row.factored_seconds = median_seconds(opts.runs, [&] { (void)factored_response(fk, u); });
    row.speedup = row.factored_seconds > 0 ? direct_time / row.factored_seconds : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace tenkit
