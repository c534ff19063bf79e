// Criteria 1-4: index conventions, decompositions, storage counts, completion.

#include <cmath>

#include <Eigen/QR>

#include "criteria.hpp"
#include "tenkit/completion.hpp"
#include "tenkit/random.hpp"

namespace tenkit::acceptance {

namespace {

DenseTensor random_tensor(const Shape& s, Rng& rng) { return DenseTensor(s, rng.normal_vector(s.numel())); }

CPModel planted_cp(const Shape& s, Index r, Rng& rng) {
  CPModel m;
  m.shape = s;
  m.weights.resize(r);
  for (Index i = 0; i < r; ++i) m.weights[i] = rng.uniform(1.0, 2.0);
  for (Index n : s.dims()) {
    Matrix f = rng.normal_matrix(n, r);
    f.colwise().normalize();
    m.factors.push_back(std::move(f));
  }
  return m;
}

double rel(const DenseTensor& a, const DenseTensor& b) {
  return (a.data() - b.data()).norm() / std::max(a.data().norm(), 1e-300);
}

bool monotone(const std::vector<double>& v, double slack) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] + slack * std::max(1.0, v[i - 1])) return false;
  return true;
}

}  // namespace

void criterion_conventions(Checker& c) {
  Vector v(24);
  for (int i = 0; i < 24; ++i) v[i] = i + 1;
  const DenseTensor a(Shape({3, 4, 2}), v);

  Matrix a1(3, 8);
  a1 << 1, 4, 7, 10, 13, 16, 19, 22,
        2, 5, 8, 11, 14, 17, 20, 23,
        3, 6, 9, 12, 15, 18, 21, 24;
  Matrix a3(2, 12);
  for (int j = 0; j < 12; ++j) {
    a3(0, j) = j + 1;
    a3(1, j) = j + 13;
  }
  const Matrix m1 = matricize(a, 1), m3 = matricize(a, 3);
  c.require(m1.rows() == 3 && m1.cols() == 8 && m1 == a1, "mode-1 unfolding differs");
  c.require(m3.rows() == 2 && m3.cols() == 12 && m3 == a3, "mode-3 unfolding differs");
  c.require(vectorize(a) == v, "vectorization differs from 1..24");
  c.require(a(MultiIndex{2, 3, 2}) == 20.0, "entry (2,3,2) is not 20");
  c.note("A(1), A(3), vec(A) bit-exact");
}

void criterion_decompositions(Checker& c) {
  Rng rng(20240101);
  int cpd_ok = 0, cpd_total = 0;
  double worst_hosvd = 0.0, worst_parseval = 0.0, worst_tt_ratio = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 4;
    std::vector<Index> dims;
    for (int k = 0; k < d; ++k) dims.push_back(2 + static_cast<Index>(rng.below(7)));
    const Shape s(dims);
    const DenseTensor a = random_tensor(s, rng);
    const double norm = frobenius_norm(a);

    const double e_hosvd = rel(a, densify(hosvd(a)));
    worst_hosvd = std::max(worst_hosvd, e_hosvd);
    c.require(e_hosvd <= 1e-10, "HOSVD reconstruction " + fmt(e_hosvd) + " on trial " + std::to_string(trial));

    for (double eps : {1e-2, 1e-4, 1e-8}) {
      const double e = rel(a, densify(tt_svd(a, eps)));
      worst_tt_ratio = std::max(worst_tt_ratio, e / eps);
      c.require(e <= eps, "TT-SVD error " + fmt(e) + " above eps " + fmt(eps));
    }

    const TTr1Model t = ttr1_svd(a);
    double sum = 0.0;
    for (const auto& term : t.terms) sum += term.sigma * term.sigma;
    const double parseval = std::abs(sum - norm * norm) / (norm * norm);
    worst_parseval = std::max(worst_parseval, parseval);
    c.require(parseval <= 1e-10, "TTr1 Parseval defect " + fmt(parseval));

    // Planted rank-3 model on sizes >= 3.
    std::vector<Index> cdims;
    for (int k = 0; k < d; ++k) cdims.push_back(3 + static_cast<Index>(rng.below(6)));
    const DenseTensor planted = densify(planted_cp(Shape(cdims), 3, rng));
    CpdConfig cfg;
    cfg.max_iters = 200;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const CpdResult fit = cpd_als(planted, 3, cfg);
    ++cpd_total;
    if (fit.report.rel_residual <= 1e-6 && fit.report.iterations <= 200) ++cpd_ok;
  }
  const double rate = static_cast<double>(cpd_ok) / cpd_total;
  c.require(rate >= 0.9, "CPD-ALS recovered only " + std::to_string(cpd_ok) + "/" + std::to_string(cpd_total));
  c.note("HOSVD max " + fmt(worst_hosvd));
  c.note("TT max err/eps " + fmt(worst_tt_ratio));
  c.note("Parseval max " + fmt(worst_parseval));
  c.note("CPD " + std::to_string(cpd_ok) + "/" + std::to_string(cpd_total));
}

void criterion_storage(Checker& c) {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const std::int64_t n = 2 + static_cast<std::int64_t>(rng.below(9));
    const std::int64_t d = 2 + static_cast<std::int64_t>(rng.below(5));
    const std::int64_t r = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(std::min<std::int64_t>(n, 4))));
    const Shape s(std::vector<Index>(static_cast<std::size_t>(d), n));

    CPModel cp;
    cp.shape = s;
    cp.weights = Vector::Ones(r);
    for (std::int64_t k = 0; k < d; ++k) cp.factors.push_back(Matrix::Zero(n, r));

    TuckerModel tk;
    tk.core = DenseTensor(Shape(std::vector<Index>(static_cast<std::size_t>(d), r)));
    for (std::int64_t k = 0; k < d; ++k) tk.factors.push_back(Matrix::Zero(n, r));

    TTModel tt;
    for (std::int64_t k = 0; k < d; ++k) {
      tt.cores.push_back(DenseTensor(Shape({k == 0 ? 1 : r, n, k == d - 1 ? 1 : r})));
    }

    std::int64_t rd = 1;
    for (std::int64_t k = 0; k < d; ++k) rd *= r;
    const std::int64_t cp_expect = n * d * r;
    const std::int64_t tucker_expect = rd + n * d * r;
    const std::int64_t tt_expect = (d - 2) * n * r * r + 2 * n * r;
    const std::string tag = " (n=" + std::to_string(n) + ", d=" + std::to_string(d) + ", r=" + std::to_string(r) + ")";
    c.require(parameter_count(cp) == cp_expect && cp_parameter_count(n, d, r) == cp_expect, "CP count" + tag);
    c.require(parameter_count(tk) == tucker_expect && tucker_parameter_count(n, d, r) == tucker_expect, "Tucker count" + tag);
    c.require(parameter_count(tt) == tt_expect && tt_parameter_count(n, d, r) == tt_expect, "TT count" + tag);
  }
  c.note("20 triples, CP ndr, Tucker r^d+ndr, TT (d-2)nr^2+2nr");
}

void criterion_completion(Checker& c) {
  {
    Rng rng(2024);
    const Shape s({20, 20, 20});
    const DenseTensor a = densify(planted_cp(s, 3, rng));
    std::vector<MultiIndex> omega;
    for (auto off : rng.sample_without_replacement(s.numel(), 1600)) omega.push_back(multi_index(s, off));
    const CompletionResult fit = complete_fixed_rank(project_omega(a, omega), 3);
    const double e = rel(a, densify(fit.model));
    c.require(e < 1e-4, "CP-rank-3 recovery error " + fmt(e));
    c.require(monotone(fit.report.objective, 1e-12), "fixed-rank objective increased");
    c.note("CP rank-3 20% error " + fmt(e) + " in " + std::to_string(fit.report.iterations) + " it");
  }
  {
    Rng rng(1);
    const Shape s({10, 10, 10});
    const DenseTensor core = random_tensor(Shape({2, 2, 2}), rng);
    std::vector<Matrix> fs;
    for (int k = 0; k < 3; ++k) {
      Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(10, 2));
      fs.push_back(qr.householderQ() * Matrix::Identity(10, 2));
    }
    const DenseTensor truth = multi_mode_product(core, fs);
    std::vector<MultiIndex> omega;
    for (auto off : rng.sample_without_replacement(s.numel(), 400)) omega.push_back(multi_index(s, off));
    const NuclearResult fit = complete_nuclear(project_omega(truth, omega));
    const double e = rel(truth, fit.x);
    c.require(e < 1e-2, "nuclear-norm recovery error " + fmt(e));
    c.require(monotone(fit.observed_residual, 0.0), "nuclear-norm observed residual increased");
    c.note("nuclear 40% error " + fmt(e));
  }
}

}  // namespace tenkit::acceptance
