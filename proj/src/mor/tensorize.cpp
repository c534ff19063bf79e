#include <algorithm>
#include <cmath>
#include <numeric>

#include "tenkit/error.hpp"
#include "tenkit/mor.hpp"

namespace tenkit {

namespace {

/// out(i_perm[0], ..., i_perm[d-1]) = a(i_0, ..., i_{d-1}) for modes that all share one extent.
DenseTensor permute_modes(const DenseTensor& a, const std::vector<int>& perm) {
  const Shape& s = a.shape();
  const int d = s.order();
  std::vector<Index> stride(static_cast<std::size_t>(d), 1);
  for (int k = 1; k < d; ++k) stride[static_cast<std::size_t>(k)] = stride[static_cast<std::size_t>(k - 1)] * s.extent(k);
  Vector out(a.size());
  std::vector<Index> idx(static_cast<std::size_t>(d), 0);
  for (Index off = 0; off < a.size(); ++off) {
    Index dst = 0;
    for (int k = 0; k < d; ++k) dst += idx[static_cast<std::size_t>(k)] * stride[static_cast<std::size_t>(perm[static_cast<std::size_t>(k)])];
    out[dst] = a.data()[off];
    for (int k = 0; k < d; ++k) {
      if (++idx[static_cast<std::size_t>(k)] < s.extent(k + 1)) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return DenseTensor(s, std::move(out));
}

/// Average over all permutations of modes 2..d.
DenseTensor symmetrize_state_modes(const DenseTensor& a) {
  const int d = a.order();
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  Vector sum = Vector::Zero(a.size());
  int count = 0;
  do {
    sum += permute_modes(a, perm).data();
    ++count;
  } while (std::next_permutation(perm.begin() + 1, perm.end()));
  return DenseTensor(a.shape(), sum / count);
}

double relative_fit(const DenseTensor& a, const CPModel& m) {
  const double na = frobenius_norm(a);
  const double err = (densify(m).data() - a.data()).norm();
  return na > 0 ? err / na : err;
}

FactoredTerm fit_term(const DenseTensor& a, FactoredTerm::Kind kind, std::optional<Index> rank, const TensorizeOptions& opts,
                      bool symmetric, std::vector<std::string>& warnings, bool& ok) {
  FactoredTerm t;
  t.kind = kind;
  const char* name = kind == FactoredTerm::Kind::quadratic ? "B" : kind == FactoredTerm::Kind::cubic ? "C" : "D";
  if (frobenius_norm(a) == 0.0) {
    t.cp = CPModel::zero(a.shape());
    t.shared = symmetric;
    return t;
  }
  const Index r_max = opts.als_max_rank > 0 ? opts.als_max_rank : a.shape().extent(1);
  if (symmetric) {
    std::optional<PartialSymmetricCpdResult> best;
    const Index lo = rank ? *rank : 1, hi = rank ? *rank : r_max;
    for (Index r = lo; r <= hi; ++r) {
      PartialSymmetricCpdResult fit = cpd_partial_symmetric(a, r, opts.cpd);
      if (!best || fit.report.rel_residual < best->report.rel_residual) best = std::move(fit);
      if (best->report.rel_residual <= opts.eps) break;
    }
    t.cp = best->model.to_cp();
    t.shared = true;
  } else if (rank) {
    t.cp = cpd_als(a, *rank, opts.cpd).model;
  } else {
    IncrementalCpdResult fit = cpd_fit_incremental(a, opts.eps, r_max, opts.cpd);
    t.cp = fit.target_met ? std::move(fit.model) : cp_from_slices(a, opts.eps);
  }
  t.fit_error = relative_fit(a, t.cp);
  if (t.fit_error > opts.eps) {
    ok = false;
    warnings.push_back(std::string(name) + ": CP fit error " + std::to_string(t.fit_error) + " at rank " +
                       std::to_string(t.rank()) + " exceeds eps");
  }
  return t;
}

}  // namespace

TensorizedSystem tensorize(const PolynomialSystem& sys, const TensorizeOptions& opts) {
  sys.validate();
  if (!(opts.eps > 0.0)) throw ValidationError("tensorize eps must be positive");
  for (const auto& r : {opts.rank_b, opts.rank_c, opts.rank_d})
    if (r && *r < 1) throw ValidationError("CP ranks must be at least 1");
  const Index n = sys.n;
  TensorizedSystem out;
  out.A = sys.A;
  out.E = sys.E;
  out.input = sys.input;
  out.symmetric = opts.symmetric;

  DenseTensor b = reshape(Eigen::Map<const Vector>(sys.B.data(), sys.B.size()), Shape({n, n, n}));
  DenseTensor c = reshape(Eigen::Map<const Vector>(sys.C.data(), sys.C.size()), Shape({n, n, n, n}));
  if (opts.symmetric) {
    b = symmetrize_state_modes(b);
    c = symmetrize_state_modes(c);
  }
  out.terms.push_back(fit_term(b, FactoredTerm::Kind::quadratic, opts.rank_b, opts, opts.symmetric, out.warnings, out.fit_ok));
  out.terms.push_back(fit_term(c, FactoredTerm::Kind::cubic, opts.rank_c, opts, opts.symmetric, out.warnings, out.fit_ok));
  if (sys.m > 0) {
    const DenseTensor d = reshape(Eigen::Map<const Vector>(sys.D.data(), sys.D.size()), Shape({n, n, sys.m}));
    out.terms.push_back(fit_term(d, FactoredTerm::Kind::bilinear, opts.rank_d, opts, false, out.warnings, out.fit_ok));
  }
  return out;
}

}  // namespace tenkit
