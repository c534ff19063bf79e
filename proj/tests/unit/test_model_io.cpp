#include <doctest.h>

#include <filesystem>
#include <map>
#include <unistd.h>

#include "tenkit/error.hpp"
#include "tenkit/model_io.hpp"
#include "test_helpers.hpp"

using namespace tenkit;
using tenkit::testing::random_cp;
using tenkit::testing::random_tensor;
using tenkit::testing::rel_diff;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("tenkit_test_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

/// Every file under a directory, by relative path.
std::map<std::string, std::string> contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).generic_string()] = io::read_file(e.path());
  return out;
}

template <typename Model, typename Reader>
void check_round_trip(const Model& m, Reader read, const ScratchDir& dir) {
  io::write_model(dir.path / "a", m);
  const Model back = read(dir.path / "a");
  CHECK(rel_diff(densify(m), densify(back)) == 0.0);
  io::write_model(dir.path / "b", back);
  CHECK(contents(dir.path / "a") == contents(dir.path / "b"));
}

}  // namespace

TEST_CASE("factored models round-trip byte-stably") {
  ScratchDir dir("models");
  Rng rng(12);
  const DenseTensor a = random_tensor(Shape({4, 3, 5}), rng);

  check_round_trip(random_cp(Shape({4, 3, 5}), 3, rng), io::read_cp_model, dir);
  fs::remove_all(dir.path / "a");
  fs::remove_all(dir.path / "b");
  check_round_trip(hosvd(a), io::read_tucker_model, dir);
  CHECK(io::model_kind(dir.path / "a") == "tucker");
  CHECK(io::read_tucker_model(dir.path / "a").hosvd);
  fs::remove_all(dir.path / "a");
  fs::remove_all(dir.path / "b");
  check_round_trip(tt_svd(a, 1e-3), io::read_tt_model, dir);
  fs::remove_all(dir.path / "a");
  fs::remove_all(dir.path / "b");
  check_round_trip(ttr1_svd(a).truncated(5), io::read_ttr1_model, dir);
  fs::remove_all(dir.path / "a");
  fs::remove_all(dir.path / "b");

  SymmetricCPModel s;
  s.order = 3;
  s.lambda = Vector::LinSpaced(2, 2.0, 1.0);
  s.vectors = rng.normal_matrix(4, 2);
  s.vectors.colwise().normalize();
  check_round_trip(s, io::read_symmetric_model, dir);

  CHECK_THROWS_AS(io::read_cp_model(dir.path / "a"), IoError);
  CHECK_THROWS_AS(io::read_cp_model(dir.path / "missing"), IoError);
}

TEST_CASE("polynomial and factored systems round-trip") {
  ScratchDir dir("systems");
  Rng rng(13);
  PolynomialSystem s = PolynomialSystem::zeros(3, 1);
  s.A = rng.normal_matrix(3, 3);
  s.C = rng.normal_matrix(3, 27);
  s.E = rng.normal_matrix(3, 1);
  io::write_system(dir.path / "p", s);
  CHECK(fs::exists(dir.path / "p" / "B.ten"));
  const PolynomialSystem back = io::read_system(dir.path / "p");
  CHECK(back.A == s.A);
  CHECK(back.C == s.C);
  CHECK(back.B.isZero(0));

  // Missing blocks read as zero.
  io::write_json(dir.path / "q" / "system.json", {{"kind", "polynomial-system"}, {"n", 2}, {"m", 0}});
  const PolynomialSystem bare = io::read_system(dir.path / "q");
  CHECK(bare.A.isZero(0));
  CHECK(bare.C.cols() == 8);

  const TensorizedSystem t = tensorize(s);
  io::write_factored_system(dir.path / "f", t);
  Matrix v;
  const FactoredSystem f = io::read_factored_system(dir.path / "f", &v);
  CHECK(v.size() == 0);
  const Vector x = rng.normal_vector(3), u = rng.normal_vector(1);
  CHECK(rel_diff(f.rhs(x, u), t.rhs(x, u)) == 0.0);
  io::write_factored_system(dir.path / "g", f);
  CHECK(contents(dir.path / "f") == contents(dir.path / "g"));

  PolynomialSystem autonomous = PolynomialSystem::zeros(2, 0);
  autonomous.A = -Matrix::Identity(2, 2);
  autonomous.B(0, 3) = 1.0;
  const TensorizedSystem ta = tensorize(autonomous);
  io::write_factored_system(dir.path / "h", ta);
  CHECK(!fs::exists(dir.path / "h" / "E.ten"));
  CHECK(io::read_factored_system(dir.path / "h").inputs() == 0);
}

TEST_CASE("expansions and transform lists round-trip") {
  GpcExpansion e = make_expansion({Measure::gaussian(), Measure::uniform()}, 2);
  for (Index j = 0; j < e.coefficients.size(); ++j) e.coefficients[j] = 0.1 * static_cast<double>(j) - 1.0 / 3.0;
  const io::json j = io::expansion_to_json(e);
  const GpcExpansion back = io::expansion_from_json(j);
  CHECK(back.coefficients == e.coefficients);
  CHECK(back.multi_indices == e.multi_indices);
  CHECK(back.measures[1].kind() == Measure::Kind::uniform);
  CHECK(io::expansion_to_json(back).dump() == j.dump());

  Rank1Tensor t;
  t.weight = 0.5;
  t.vectors = {Vector::LinSpaced(3, 0, 1), Vector::LinSpaced(2, -1, 1)};
  const auto list = io::rank1_list_from_json(io::rank1_list_to_json({t}));
  REQUIRE(list.size() == 1);
  CHECK(list[0].weight == 0.5);
  CHECK(list[0].vectors[1] == t.vectors[1]);
}

TEST_CASE("exact CP from mode-(1,2) slices") {
  Rng rng(14);
  const DenseTensor a = random_tensor(Shape({3, 4, 2, 2}), rng);
  const CPModel exact = cp_from_slices(a);
  CHECK(rel_diff(a, densify(exact)) < 1e-13);
  CHECK(exact.rank() <= 3 * 2 * 2);

  const DenseTensor low = densify(random_cp(Shape({5, 5, 5}), 2, rng));
  const CPModel compact = cp_from_slices(low, 1e-10);
  CHECK(rel_diff(low, densify(compact)) <= 1e-10);
  CHECK(compact.rank() <= 2 * 5);

  const CPModel loose = cp_from_slices(a, 0.5);
  CHECK(rel_diff(a, densify(loose)) <= 0.5);
  CHECK(loose.rank() < exact.rank());
}
