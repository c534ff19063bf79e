#include <doctest.h>

#include <cmath>

#include "tenkit/error.hpp"
#include "tenkit/random.hpp"
#include "tenkit/volterra.hpp"
#include "test_helpers.hpp"

using namespace tenkit;
using tenkit::testing::random_cp;
using tenkit::testing::rel_diff;

namespace {

VolterraKernel3 kernel_of(const CPModel& m) { return {densify(m), 1.0}; }

FactoredKernel3 exact_factored(const CPModel& m) {
  FactoredKernel3 f;
  f.cp = m;
  return f;
}

}  // namespace

TEST_CASE("FFT convolution matches the defining sum") {
  Rng rng(1);
  for (Index la : {1, 5, 17}) {
    for (Index lb : {1, 8, 33}) {
      const Vector a = rng.normal_vector(la), b = rng.normal_vector(lb);
      CHECK(rel_diff(direct_convolve(a, b), fft_convolve(a, b)) < 1e-10);
    }
  }
}

TEST_CASE("direct response on hand-expanded kernels") {
  Vector impulse27 = Vector::Zero(27);
  impulse27[0] = 1.0;
  const VolterraKernel3 delta{DenseTensor(Shape({3, 3, 3}), impulse27), 1.0};
  Vector u(6);
  u << 1, -2, 0.5, 3, 0, 1;
  const Vector y = direct_response(delta, u);
  CHECK(y[0] == 0.0);
  for (Index k = 1; k < 6; ++k) CHECK(y[k] == doctest::Approx(std::pow(u[k - 1], 3)));

  Vector a(3);
  a << 0.5, -1.0, 2.0;
  CPModel r1;
  r1.shape = Shape({3, 3, 3});
  r1.weights = Vector::Ones(1);
  for (int k = 0; k < 3; ++k) r1.factors.push_back(a);
  Vector impulse = Vector::Zero(8);
  impulse[0] = 1.0;
  const Vector yi = direct_response(kernel_of(r1), impulse);
  for (Index k = 0; k < 8; ++k) {
    // 1-based k' = k + 1; y3[k'] = a[k' - 1]^3 for 1 <= k' - 1 <= M.
    const double expect = (k >= 1 && k <= 3) ? std::pow(a[k - 1], 3) : 0.0;
    CHECK(yi[k] == doctest::Approx(expect));
  }

  Rng rng(2);
  const VolterraKernel3 rnd{DenseTensor(Shape({4, 4, 4}), rng.normal_vector(64)), 1.0};
  const Vector ones = Vector::Ones(10);
  const Vector yc = direct_response(rnd, ones);
  for (Index k = 5; k < 10; ++k) CHECK(yc[k] == doctest::Approx(rnd.h.data().sum()));
}

TEST_CASE("factored response equals the triple sum for exact-rank kernels") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 1 + static_cast<Index>(rng.below(8));
    const Index k = 1 + static_cast<Index>(rng.below(64));
    const Index r = 1 + static_cast<Index>(rng.below(4));
    const CPModel cp = random_cp(Shape({m, m, m}), r, rng);
    const Vector u = rng.normal_vector(k);
    const Vector direct = direct_response(kernel_of(cp), u);
    const Vector fac = factored_response(exact_factored(cp), u, 1 + trial % 3);
    CHECK((fac - direct).norm() <= 1e-8 * std::max(direct.norm(), 1e-300));
  }
  const CPModel cp = random_cp(Shape({3, 3, 3}), 2, rng);
  CHECK(factored_response(exact_factored(cp), Vector::Zero(9)).norm() == 0.0);
}

TEST_CASE("cubic homogeneity and shift invariance") {
  Rng rng(4);
  const CPModel cp = random_cp(Shape({6, 6, 6}), 3, rng);
  const FactoredKernel3 fk = exact_factored(cp);
  const VolterraKernel3 kern = kernel_of(cp);
  const Vector u = rng.normal_vector(40);
  const double lambda = -1.7;
  const Vector y = direct_response(kern, u), yf = factored_response(fk, u);
  CHECK(rel_diff(Vector(std::pow(lambda, 3) * y), direct_response(kern, lambda * u)) < 1e-10);
  CHECK(rel_diff(Vector(std::pow(lambda, 3) * yf), factored_response(fk, lambda * u)) < 1e-10);

  const Index s = 7;
  Vector shifted = Vector::Zero(u.size() + s);
  shifted.tail(u.size()) = u;
  const Vector ys = direct_response(kern, shifted), yfs = factored_response(fk, shifted);
  CHECK(ys.head(s).norm() == 0.0);
  CHECK(ys.tail(u.size()) == y);
  CHECK(yfs.head(s).cwiseAbs().maxCoeff() < 1e-12 * yf.norm());
  CHECK(rel_diff(Vector(yfs.tail(u.size())), yf) < 1e-10);
}

TEST_CASE("rank trade-off on a low-pass kernel") {
  const VolterraKernel3 kern = lowpass_kernel(8, 3.0);
  Rng rng(5);
  const Vector u = rng.normal_vector(60);
  TradeoffOptions opts;
  opts.runs = 1;
  opts.cpd.restarts = 2;
  const auto rows = tradeoff_report(kern, u, {1, 2, 4, 64}, opts);
  REQUIRE(rows.size() == 4);
  CHECK(rows.back().response_rel_error < rows.front().response_rel_error);
  CHECK(rows[2].kernel_fit_error < rows[0].kernel_fit_error);
  CHECK(rows.back().response_rel_error < 1e-8);
  CHECK(rows.back().kernel_fit_error < 1e-12);
  CHECK_THROWS_AS(tradeoff_report(kern, u, {}), ValidationError);
}

TEST_CASE("kernel validation") {
  VolterraKernel3 bad{DenseTensor(Shape({2, 3, 2}), Vector::Zero(12)), 1.0};
  CHECK_THROWS_AS(direct_response(bad, Vector::Ones(3)), DimensionError);
  CHECK_THROWS_AS(lowpass_kernel(0, 1.0), ValidationError);
}
