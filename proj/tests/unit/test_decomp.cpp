#include <doctest.h>

#include <Eigen/SVD>

#include "tenkit/error.hpp"
#include "tenkit/linalg.hpp"
#include "test_helpers.hpp"

using namespace tenkit;
using tenkit::testing::iota_tensor;
using tenkit::testing::random_cp;
using tenkit::testing::random_tensor;
using tenkit::testing::rel_diff;

namespace {

DenseTensor symmetric_cube(const Matrix& v, const Vector& lambda, int order) {
  SymmetricCPModel m{order, lambda, v};
  return densify(m);
}

Index matrix_rank(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector s = svd.singularValues();
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > 1e-9 * s[0]) ++r;
  return r;
}

}  // namespace

TEST_CASE("cp-als exact rank-1") {
  Rng rng(1);
  Rank1Tensor t{{rng.normal_vector(4), rng.normal_vector(3), rng.normal_vector(5)}, 2.5};
  CpdResult fit = cpd_als(densify(t), 1);
  CHECK(fit.report.rel_residual < 1e-10);
  CHECK(fit.model.weights[0] > 0);
  for (const auto& f : fit.model.factors) CHECK(f.col(0).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cp-als recovers planted rank-3 and is monotone") {
  Rng rng(42);
  CPModel truth = random_cp(Shape({10, 10, 10}), 3, rng);
  DenseTensor a = densify(truth);
  CpdConfig cfg;
  cfg.max_iters = 200;
  CpdResult fit = cpd_als(a, 3, cfg);
  CHECK(fit.report.rel_residual < 1e-6);
  for (std::size_t i = 1; i < fit.report.history.size(); ++i) {
    CHECK(fit.report.history[i] <= fit.report.history[i - 1] + 1e-12);
  }
  CpdResult over = cpd_als(a, 4, cfg);
  CHECK(over.report.rel_residual <= fit.report.rel_residual + 1e-8);
}

TEST_CASE("cp-als canonical form is deterministic") {
  Rng rng(8);
  DenseTensor a = random_tensor(Shape({4, 5, 3}), rng);
  CpdConfig cfg;
  cfg.max_iters = 50;
  cfg.seed = 3;
  CpdResult x = cpd_als(a, 2, cfg), y = cpd_als(a, 2, cfg);
  CHECK(x.model.weights == y.model.weights);
  for (int k = 0; k < 3; ++k) CHECK(x.model.factors[k] == y.model.factors[k]);
  CHECK(x.model.weights[0] >= x.model.weights[1]);
  CHECK(x.model.weights.minCoeff() >= 0);
}

TEST_CASE("cp model entry formula matches densify") {
  Rng rng(12);
  CPModel m = random_cp(Shape({4, 3, 5, 2}), 3, rng);
  DenseTensor d = densify(m);
  for (int i = 0; i < 1000; ++i) {
    const Index e = static_cast<Index>(rng.below(static_cast<std::uint64_t>(d.size())));
    REQUIRE(m.entry(multi_index(d.shape(), e)) == doctest::Approx(d[e]).epsilon(1e-12));
  }
}

TEST_CASE("incremental cp fit") {
  Rng rng(4);
  DenseTensor a = densify(random_cp(Shape({5, 6, 4}), 2, rng));
  IncrementalCpdResult fit = cpd_fit_incremental(a, 1e-8, 4);
  CHECK(fit.target_met);
  CHECK(fit.rank == 2);

  IncrementalCpdResult zero = cpd_fit_incremental(DenseTensor(Shape({3, 3, 3})), 1e-8, 3);
  CHECK(zero.rank == 1);
  CHECK(zero.model.weights[0] == 0.0);
  CHECK(zero.report.rel_residual == 0.0);

  IncrementalCpdResult noise = cpd_fit_incremental(random_tensor(Shape({6, 6, 6}), rng), 1e-3, 2);
  CHECK_FALSE(noise.target_met);
  CHECK_THROWS_AS(cpd_fit_incremental(a, 1.5, 2), ValidationError);
}

TEST_CASE("hosvd exact reconstruction and core structure") {
  Rng rng(21);
  DenseTensor a = random_tensor(Shape({4, 5, 3, 2}), rng);
  TuckerModel t = hosvd(a);
  CHECK(rel_diff(a, densify(t)) < 1e-10);
  for (int k = 1; k <= 4; ++k) {
    const Matrix& u = t.factors[static_cast<std::size_t>(k - 1)];
    CHECK((u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm() < 1e-10);
    const Matrix unf = matricize(t.core, k);
    const Matrix g = unf * unf.transpose();
    const Matrix off = g - Matrix(g.diagonal().asDiagonal());
    CHECK(off.norm() < 1e-8 * g.norm());
    Vector norms = slice_norms(t.core, k);
    for (Index i = 1; i < norms.size(); ++i) CHECK(norms[i] <= norms[i - 1] + 1e-12);
  }
}

TEST_CASE("hosvd of diagonal and iota tensors") {
  DenseTensor diag = DenseTensor::generate(Shape({3, 3, 3}), [](const MultiIndex& i) {
    return (i[0] == i[1] && i[1] == i[2]) ? 4.0 - static_cast<double>(i[0]) : 0.0;
  });
  TuckerModel t = hosvd(diag);
  for (int k = 1; k <= 3; ++k) {
    Vector n = slice_norms(t.core, k);
    CHECK(n[0] == doctest::Approx(3.0));
    CHECK(n[1] == doctest::Approx(2.0));
    CHECK(n[2] == doctest::Approx(1.0));
  }
  DenseTensor a = iota_tensor({3, 4, 2});
  for (int k = 1; k <= 3; ++k) CHECK(matrix_rank(matricize(a, k)) == 2);
  CHECK(hosvd(a).multilinear_rank() == std::vector<Index>{2, 2, 2});
  CHECK(rel_diff(a, densify(hosvd(a))) < 1e-12);
}

TEST_CASE("tucker truncation") {
  DenseTensor a = iota_tensor({3, 4, 2});
  CHECK(tucker_truncate(a, {2, 2, 2}).rel_error < 1e-10);
  Rng rng(3);
  Rank1Tensor r1{{rng.normal_vector(3), rng.normal_vector(4), rng.normal_vector(2)}, 1.0};
  CHECK(tucker_truncate(densify(r1), {1, 1, 1}).rel_error < 1e-12);
  CHECK_THROWS_AS(tucker_truncate(a, {4, 1, 1}), DimensionError);
  CHECK_THROWS_AS(tucker_truncate(a, {0, 1, 1}), DimensionError);

  // Alternating refinement (higher-order orthogonal iteration) as an oracle
  // for the best rank-(1,1,1) approximation.
  const double hosvd_err = tucker_truncate(a, {1, 1, 1}).error;
  Vector u = tucker_truncate(a, {1, 1, 1}).model.factors[0].col(0);
  Vector v = tucker_truncate(a, {1, 1, 1}).model.factors[1].col(0);
  Vector w = tucker_truncate(a, {1, 1, 1}).model.factors[2].col(0);
  for (int it = 0; it < 200; ++it) {
    u = contract(contract(a, 3, w), 2, v).data().normalized();
    v = contract(contract(a, 3, w), 1, u).data().normalized();
    w = contract(contract(a, 2, v), 1, u).data().normalized();
  }
  const double best_core = inner(a, Rank1Tensor{{u, v, w}, 1.0});
  const double oracle_err = std::sqrt(std::max(0.0, inner(a, a) - best_core * best_core));
  CHECK(hosvd_err >= oracle_err - 1e-9);
  CHECK(hosvd_err <= 1.05 * oracle_err);
}

TEST_CASE("tt-svd error bound and ranks") {
  Rng rng(31);
  DenseTensor a = random_tensor(Shape({4, 3, 5, 4}), rng);
  TTModel exact = tt_svd(a, 0.0);
  CHECK(rel_diff(a, densify(exact)) < 1e-10);
  std::vector<Index> r = exact.ranks();
  for (int k = 1; k < 4; ++k) {
    Index rows = 1;
    for (int j = 0; j < k; ++j) rows *= a.shape().dims()[j];
    const Matrix unf = Eigen::Map<const Matrix>(a.data().data(), rows, a.size() / rows);
    CHECK(r[k] == matrix_rank(unf));
  }
  CHECK(r.front() == 1);
  CHECK(r.back() == 1);
  for (double eps : {1e-2, 1e-4, 1e-8}) {
    TTModel t = tt_svd(a, eps);
    CHECK(rel_diff(a, densify(t)) <= eps);
  }
  Rank1Tensor r1{{rng.normal_vector(3), rng.normal_vector(4), rng.normal_vector(2), rng.normal_vector(3)}, 1.0};
  for (Index rk : tt_svd(densify(r1), 1e-12).ranks()) CHECK(rk == 1);

  Shape s8({8, 8, 8});
  DenseTensor two = densify(Rank1Tensor{{rng.normal_vector(8), rng.normal_vector(8), rng.normal_vector(8)}, 1.0}) +
                    densify(Rank1Tensor{{rng.normal_vector(8), rng.normal_vector(8), rng.normal_vector(8)}, 1.0});
  CHECK(tt_svd(two, 1e-10).ranks() == std::vector<Index>{1, 2, 2, 1});
  CHECK(matrix_rank(matricize(two, 1)) == 2);
}

TEST_CASE("tt entry formula and arithmetic") {
  Rng rng(13);
  DenseTensor a = random_tensor(Shape({3, 4, 2, 3}), rng);
  DenseTensor b = random_tensor(Shape({3, 4, 2, 3}), rng);
  TTModel ta = tt_svd(a, 0.0), tb = tt_svd(b, 0.0);
  DenseTensor da = densify(ta);
  for (Index e = 0; e < da.size(); e += 7) CHECK(ta.entry(multi_index(da.shape(), e)) == doctest::Approx(da[e]));
  CHECK(tt_inner(ta, tb) == doctest::Approx(inner(a, b)).epsilon(1e-10));
  CHECK(rel_diff(a + b, densify(tt_sum(ta, tb))) < 1e-12);
  CHECK(rel_diff(2.0 * a, densify(tt_scaled(ta, 2.0))) < 1e-12);
  Vector prod = a.data().cwiseProduct(b.data());
  CHECK(rel_diff(DenseTensor(a.shape(), prod), densify(tt_hadamard(ta, tb))) < 1e-12);
  Rank1Tensor w{{rng.normal_vector(3), rng.normal_vector(4), rng.normal_vector(2), rng.normal_vector(3)}, 1.5};
  Vector pw = a.data().cwiseProduct(densify(w).data());
  CHECK(rel_diff(DenseTensor(a.shape(), pw), densify(tt_hadamard(ta, w))) < 1e-12);
  TTModel big = tt_sum(ta, ta);
  TTModel rounded = tt_round(big, 1e-12);
  CHECK(rel_diff(2.0 * a, densify(rounded)) < 1e-10);
  CHECK(rounded.ranks() == ta.ranks());
  CHECK(rel_diff(DenseTensor::constant(a.shape(), 2.0), densify(tt_constant(a.shape(), 2.0))) < 1e-15);
}

TEST_CASE("ttr1 expansion") {
  Rng rng(17);
  Rank1Tensor r1{{rng.normal_vector(3), rng.normal_vector(4), rng.normal_vector(2)}, 1.0};
  TTr1Model one = ttr1_svd(densify(r1));
  REQUIRE(one.terms.size() == 1);
  CHECK(one.terms[0].sigma == doctest::Approx(frobenius_norm(densify(r1))));

  DenseTensor a = random_tensor(Shape({3, 4, 2, 3}), rng);
  TTr1Model t = ttr1_svd(a);
  double ss = 0.0;
  for (const auto& term : t.terms) {
    CHECK(term.sigma >= 0);
    ss += term.sigma * term.sigma;
  }
  CHECK(std::abs(ss - inner(a, a)) <= 1e-10 * inner(a, a));
  CHECK(rel_diff(a, densify(t)) < 1e-10);
  for (std::size_t i = 0; i < t.terms.size(); i += 5) {
    for (std::size_t j = i + 1; j < t.terms.size(); j += 3) {
      double ip = 1.0;
      for (std::size_t k = 0; k < 4; ++k) ip *= t.terms[i].vectors[k].dot(t.terms[j].vectors[k]);
      CHECK(std::abs(ip) < 1e-8);
    }
  }
  for (std::size_t k : {std::size_t{1}, std::size_t{5}, std::size_t{10}}) {
    const double err = (a.data() - densify(t.truncated(k)).data()).norm();
    CHECK(err == doctest::Approx(t.truncation_error(k)).epsilon(1e-8));
  }
  CHECK(ttr1_svd(a).terms.size() == t.terms.size());
  CHECK(ttr1_svd(a).terms[0].sigma == t.terms[0].sigma);
}

TEST_CASE("symmetric cp") {
  Rng rng(19);
  Vector v = rng.normal_vector(4);
  DenseTensor cube = symmetric_cube(v, Vector::Ones(1), 3);
  SymmetricCpdResult one = cpd_symmetric(cube, 1);
  CHECK(one.model.lambda[0] == doctest::Approx(std::pow(v.norm(), 3)).epsilon(1e-8));
  CHECK((one.model.vectors.col(0) - v.normalized()).norm() < 1e-8);

  Matrix q = Eigen::HouseholderQR<Matrix>(rng.normal_matrix(5, 2)).householderQ() * Matrix::Identity(5, 2);
  Vector lam(2);
  lam << 2.0, 1.0;
  SymmetricCpdResult two = cpd_symmetric(symmetric_cube(q, lam, 3), 2);
  CHECK(two.report.rel_residual < 1e-8);

  // x^3 + y^3 as a symmetric 2x2x2 tensor: only a_111 and a_222 are nonzero.
  DenseTensor waring = DenseTensor::generate(Shape({2, 2, 2}), [](const MultiIndex& i) {
    return (i[0] == i[1] && i[1] == i[2]) ? 1.0 : 0.0;
  });
  CHECK(cpd_symmetric(waring, 2).report.rel_residual < 1e-8);

  CHECK_THROWS_AS(cpd_symmetric(iota_tensor({2, 2, 2}), 1), ValidationError);
  CHECK(symmetry_defect(cube) < 1e-14);
}

TEST_CASE("partially symmetric cp") {
  Rng rng(23);
  PartialSymmetricCPModel truth;
  truth.order = 3;
  truth.weights = Vector::Ones(2);
  truth.lead = rng.normal_matrix(4, 2);
  truth.shared = rng.normal_matrix(3, 2);
  DenseTensor a = densify(truth.to_cp());
  CHECK(symmetry_defect(a, 2) < 1e-14);
  CpdConfig cfg;
  cfg.restarts = 5;
  PartialSymmetricCpdResult fit = cpd_partial_symmetric(a, 2, cfg);
  CHECK(fit.report.rel_residual < 1e-8);
  CHECK(rel_diff(a, densify(fit.model.to_cp())) < 1e-8);
}

TEST_CASE("storage counts") {
  CHECK(cp_parameter_count(10, 3, 5) == 150);
  CHECK(tt_parameter_count(10, 3, 5) == 350);
  CHECK(tucker_parameter_count(10, 3, 5) == 125 + 150);
  Rng rng(2);
  DenseTensor a = random_tensor(Shape({4, 4, 4, 4}), rng);
  TTModel t = tt_svd(a, 0.0);
  std::int64_t manual = 0;
  for (const auto& c : t.cores) manual += c.size();
  CHECK(parameter_count(t) == manual);
  CHECK(parameter_count(random_cp(Shape({4, 5, 6}), 3, rng)) == 45);
}

TEST_CASE("factored inner products with rank-1 tensors") {
  Rng rng(29);
  Shape s({4, 4, 4, 4, 4, 4});
  DenseTensor a = random_tensor(s, rng);
  Rank1Tensor w;
  for (int k = 0; k < 6; ++k) w.vectors.push_back(rng.normal_vector(4));
  const double dense = inner(a, densify(w));
  TTModel t = tt_svd(a, 0.0);
  OpCounter ops;
  CHECK(std::abs(factored_inner_rank1(t, w, &ops) - dense) <= 1e-10 * std::abs(dense));
  const std::vector<Index> r = t.ranks();
  std::int64_t bound = 0;
  for (int k = 0; k < 6; ++k) bound += 4 * r[k] * r[k + 1] + r[k] * r[k + 1];
  CHECK(ops.madds <= 2 * bound);

  CPModel cp = random_cp(Shape({5, 3, 4}), 3, rng);
  Rank1Tensor w3{{rng.normal_vector(5), rng.normal_vector(3), rng.normal_vector(4)}, 1.0};
  CHECK(factored_inner_rank1(cp, w3) == doctest::Approx(inner(densify(cp), densify(w3))).epsilon(1e-10));
  TuckerModel tk = hosvd(densify(cp));
  CHECK(factored_inner_rank1(tk, w3) == doctest::Approx(inner(densify(cp), densify(w3))).epsilon(1e-10));
}
