#include <doctest.h>

#include "tenkit/error.hpp"
#include "tenkit/io.hpp"
#include "test_helpers.hpp"

using namespace tenkit;
using tenkit::testing::brute_inner;
using tenkit::testing::iota_tensor;
using tenkit::testing::random_tensor;

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(Shape({}), DimensionError);
  CHECK_THROWS_AS(Shape({3, 0}), DimensionError);
  CHECK_THROWS(Shape({Index{1} << 40, Index{1} << 40}));
  CHECK(Shape({3, 4, 2}).numel() == 24);
}

TEST_CASE("linear index is first-index-fastest") {
  Shape s({3, 4, 2});
  CHECK(linear_index(s, MultiIndex({1, 1, 1})) == 0);
  CHECK(linear_index(s, MultiIndex({2, 1, 1})) == 1);
  CHECK(linear_index(s, MultiIndex({1, 2, 1})) == 3);
  CHECK(linear_index(s, MultiIndex({3, 4, 2})) == 23);
}

TEST_CASE("layout law on random shapes") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(5));
    std::vector<Index> dims;
    for (int k = 0; k < d; ++k) dims.push_back(1 + static_cast<Index>(rng.below(6)));
    Shape s(dims);
    DenseTensor a = random_tensor(s, rng);
    for (Index e = 0; e < a.size(); ++e) {
      MultiIndex idx = multi_index(s, e);
      Index expect = 0, stride = 1;
      for (int k = 0; k < d; ++k) {
        expect += (idx[k] - 1) * stride;
        stride *= dims[k];
      }
      REQUIRE(linear_index(s, idx) == expect);
      REQUIRE(a(idx) == a.data()[expect]);
    }
  }
}

TEST_CASE("inner product and norm") {
  DenseTensor a = iota_tensor({3, 4, 2});
  CHECK(inner(a, a) == doctest::Approx(brute_inner(a, a)));
  CHECK(inner(a, a) == 4900.0);
  CHECK(inner(a, DenseTensor(a.shape())) == 0.0);
  CHECK(frobenius_norm(a) == doctest::Approx(70.0));
  CHECK_THROWS_AS(inner(a, iota_tensor({4, 3, 2})), DimensionError);
}

TEST_CASE("inner product of rank-1 tensors factorizes") {
  Rng rng(3);
  Rank1Tensor x{{rng.normal_vector(3), rng.normal_vector(4), rng.normal_vector(2)}, 1.0};
  Rank1Tensor y{{rng.normal_vector(3), rng.normal_vector(4), rng.normal_vector(2)}, 1.0};
  const double expect = x.vectors[0].dot(y.vectors[0]) * x.vectors[1].dot(y.vectors[1]) * x.vectors[2].dot(y.vectors[2]);
  CHECK(inner(densify(x), densify(y)) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(inner(densify(x), y) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("mode-1 product with all-ones row") {
  DenseTensor a = iota_tensor({3, 4, 2});
  Matrix ones = Matrix::Ones(1, 3);
  DenseTensor b = mode_product(a, 1, ones);
  CHECK(b.shape() == Shape({1, 4, 2}));
  const std::vector<double> expect{6, 15, 24, 33, 42, 51, 60, 69};
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(b[static_cast<Index>(i)] == expect[i]);
}

TEST_CASE("mode product against brute-force summation") {
  Rng rng(11);
  DenseTensor a = random_tensor(Shape({3, 4, 5}), rng);
  for (int mode = 1; mode <= 3; ++mode) {
    const Index n = a.shape().extent(mode);
    Matrix u = rng.normal_matrix(2, n);
    DenseTensor b = mode_product(a, mode, u);
    for (Index e = 0; e < b.size(); ++e) {
      MultiIndex idx = multi_index(b.shape(), e);
      double s = 0.0;
      for (Index j = 1; j <= n; ++j) {
        std::vector<Index> src = idx.values();
        src[static_cast<std::size_t>(mode - 1)] = j;
        s += u(idx[mode - 1] - 1, j - 1) * a(MultiIndex(src));
      }
      REQUIRE(b[e] == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("mode product identities") {
  Rng rng(5);
  DenseTensor a = random_tensor(Shape({3, 4, 2}), rng);
  CHECK(mode_product(a, 2, Matrix::Identity(4, 4)).data() == a.data());
  Matrix u = rng.normal_matrix(5, 4), v = rng.normal_matrix(3, 5);
  DenseTensor twice = mode_product(mode_product(a, 2, u), 2, v);
  DenseTensor once = mode_product(a, 2, Matrix(v * u));
  CHECK(tenkit::testing::rel_diff(once, twice) < 1e-13);
  CHECK_THROWS_AS(mode_product(a, 4, u), DimensionError);
  CHECK_THROWS_AS(mode_product(a, 1, u), DimensionError);
}

TEST_CASE("diagonal core times factors equals CP sum") {
  Rng rng(9);
  const Index r = 3;
  Vector sigma(r);
  sigma << 3, 2, 1;
  DenseTensor core = DenseTensor::generate(Shape({r, r, r}), [&](const MultiIndex& i) {
    return (i[0] == i[1] && i[1] == i[2]) ? sigma[i[0] - 1] : 0.0;
  });
  std::vector<Matrix> fs{rng.normal_matrix(4, r), rng.normal_matrix(5, r), rng.normal_matrix(2, r)};
  DenseTensor lhs = multi_mode_product(core, fs);
  DenseTensor rhs(Shape({4, 5, 2}));
  for (Index i = 0; i < r; ++i) {
    rhs = rhs + densify(Rank1Tensor{{fs[0].col(i), fs[1].col(i), fs[2].col(i)}, sigma[i]});
  }
  CHECK(tenkit::testing::rel_diff(rhs, lhs) < 1e-13);
}

TEST_CASE("unfoldings of the 3x4x2 example") {
  DenseTensor a = iota_tensor({3, 4, 2});
  Matrix m1 = matricize(a, 1);
  REQUIRE(m1.rows() == 3);
  REQUIRE(m1.cols() == 8);
  for (Index j = 0; j < 8; ++j)
    for (Index i = 0; i < 3; ++i) CHECK(m1(i, j) == static_cast<double>(3 * j + i + 1));
  Matrix m3 = matricize(a, 3);
  REQUIRE(m3.rows() == 2);
  REQUIRE(m3.cols() == 12);
  for (Index j = 0; j < 12; ++j) {
    CHECK(m3(0, j) == static_cast<double>(j + 1));
    CHECK(m3(1, j) == static_cast<double>(j + 13));
  }
  Matrix m2 = matricize(a, 2);
  CHECK(m2(0, 0) == 1.0);
  CHECK(m2(1, 0) == 4.0);
  CHECK(m2(0, 1) == 2.0);
  CHECK(m2(0, 3) == 13.0);
}

TEST_CASE("matricize and fold round-trip") {
  Rng rng(1);
  DenseTensor a = random_tensor(Shape({2, 3, 4, 2}), rng);
  for (int mode = 1; mode <= 4; ++mode) CHECK(fold(matricize(a, mode), mode, a.shape()).data() == a.data());
  DenseTensor v = random_tensor(Shape({5}), rng);
  Matrix m = matricize(v, 1);
  CHECK(m.rows() == 5);
  CHECK(m.cols() == 1);
}

TEST_CASE("vectorize and reshape") {
  DenseTensor a = iota_tensor({3, 4, 2});
  Vector v = vectorize(a);
  for (Index i = 0; i < 24; ++i) CHECK(v[i] == static_cast<double>(i + 1));
  CHECK(vectorize(reshape(v, Shape({6, 4}))) == v);
  Vector ei = Vector::Zero(3), ej = Vector::Zero(4);
  ei[1] = 1.0;
  ej[2] = 1.0;
  Vector ind = vectorize(densify(Rank1Tensor{{ei, ej}, 1.0}));
  for (Index k = 0; k < 12; ++k) CHECK(ind[k] == (k == 1 + 3 * 2 ? 1.0 : 0.0));
}

TEST_CASE("kronecker conventions") {
  Vector x(2);
  x << 1, 2;
  Vector k2 = kronecker_power(x, 2);
  REQUIRE(k2.size() == 4);
  CHECK(k2[0] == 1);
  CHECK(k2[1] == 2);
  CHECK(k2[2] == 2);
  CHECK(k2[3] == 4);
  CHECK(kronecker_power(x, 1) == x);
  Rng rng(2);
  Vector u = rng.normal_vector(3), w = rng.normal_vector(4);
  Vector lhs = vectorize(densify(Rank1Tensor{{u, w}, 1.0}));
  Vector rhs = kronecker_product(w, u);
  CHECK((lhs - rhs).norm() < 1e-14);
  CHECK_THROWS(kronecker_power(Vector::Ones(1 << 16), 4));
}

TEST_CASE("rank-1 contraction matches dense inner product") {
  Rng rng(4);
  Shape s({3, 2, 4, 3});
  DenseTensor a = random_tensor(s, rng);
  Rank1Tensor w{{rng.normal_vector(3), rng.normal_vector(2), rng.normal_vector(4), rng.normal_vector(3)}, 0.5};
  const double dense = inner(a, densify(w));
  CHECK(std::abs(inner(a, w) - dense) <= 1e-12 * std::abs(dense));
}

TEST_CASE(".ten and JSON round-trips") {
  Rng rng(6);
  DenseTensor a = random_tensor(Shape({2, 3, 4}), rng);
  const std::string bytes = io::encode_ten(a);
  CHECK(bytes.substr(0, 8) == "TENKIT01");
  CHECK(bytes.size() == 8 + 4 + 3 * 8 + 24 * 8);
  DenseTensor b = io::decode_ten(bytes);
  CHECK(b.shape() == a.shape());
  CHECK(b.data() == a.data());
  CHECK(io::encode_ten(b) == bytes);
  DenseTensor c = io::tensor_from_json(io::tensor_to_json(a));
  CHECK(c.data() == a.data());
  CHECK_THROWS_AS(io::decode_ten(bytes.substr(0, 20)), IoError);
  CHECK_THROWS_AS(io::decode_ten("NOTATENS" + bytes.substr(8)), IoError);
}
