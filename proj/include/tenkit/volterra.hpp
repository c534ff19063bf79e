#pragma once

// Third-order Volterra response
//   y3[k] = sum_{m1,m2,m3 = 1..M} h3[m1,m2,m3] u[k-m1] u[k-m2] u[k-m3],  k = 1..K,
// with u[j] = 0 for j < 1. The direct triple sum is the reference; a CP
// factorization of h3 turns it into 1-D convolutions done by FFT.

#include <cstdint>
#include <string>
#include <vector>

#include "tenkit/decomp.hpp"

namespace tenkit {

struct VolterraKernel3 {
  DenseTensor h;  // M x M x M, lag m_i at index m_i
  double dt = 1.0;

  Index memory() const { return h.shape().extent(1); }
  void validate() const;
};

struct FactoredKernel3 {
  CPModel cp;
  double dt = 1.0;
  /// ||densify(cp) - h|| / ||h||.
  double fit_error = 0.0;

  Index rank() const { return cp.rank(); }
  Index memory() const { return cp.shape.extent(1); }
};

/// Exponentially decaying kernel exp(-(m1+m2+m3)/tau) / (m1+m2+m3): smooth,
/// symmetric and of rapidly decaying (but not finite) numerical rank.
VolterraKernel3 lowpass_kernel(Index memory, double tau, double dt = 1.0);

/// CPD by ALS; rank >= M^2 uses the exact slice construction.
FactoredKernel3 factor_kernel(const VolterraKernel3& kernel, Index rank, const CpdConfig& cfg = {});

Vector direct_response(const VolterraKernel3& kernel, const Vector& u);

/// Per-term convolutions may run on `threads` workers; terms are summed in
/// index order either way.
Vector factored_response(const FactoredKernel3& kernel, const Vector& u, int threads = 1);

/// Full linear convolution (length a + b - 1) by zero-padded FFT.
Vector fft_convolve(const Vector& a, const Vector& b);
/// Same by the defining sum.
Vector direct_convolve(const Vector& a, const Vector& b);

struct TradeoffRow {
  Index rank = 0;
  double kernel_fit_error = 0.0;
  double response_rel_error = 0.0;
  double direct_seconds = 0.0;
  double factored_seconds = 0.0;
  double speedup = 0.0;
};

struct TradeoffOptions {
  /// Timings are medians over this many runs.
  int runs = 5;
  CpdConfig cpd;
};

std::vector<TradeoffRow> tradeoff_report(const VolterraKernel3& kernel, const Vector& u, const std::vector<Index>& ranks,
                                         const TradeoffOptions& opts = {});

}  // namespace tenkit
