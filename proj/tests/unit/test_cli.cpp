#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <unistd.h>

#include "cli/cli.hpp"
#include "tenkit/io.hpp"
#include "tenkit/model_io.hpp"
#include "test_helpers.hpp"

using namespace tenkit;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run tenkit_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("tenkit_cli_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli tt ranks of a rank-1 tensor") {
  ScratchDir dir("tt");
  Rank1Tensor r1;
  r1.vectors = {Vector::LinSpaced(3, 1, 2), Vector::LinSpaced(4, -1, 1), Vector::LinSpaced(2, 3, 4)};
  io::write_ten(dir / "x.ten", densify(r1));
  const Run r = tenkit_cli({"decompose", "--method", "tt", "--eps", "1e-8", "--in", dir / "x.ten", "--out", dir / "out"});
  REQUIRE(r.code == 0);
  const io::json m = io::read_json(dir / "out/manifest.json");
  CHECK(m["diagnostics"]["ranks"] == io::json({1, 1, 1, 1}));
  CHECK(m["command"] == "decompose");
  CHECK(m["config"]["method"] == "tt");
  CHECK(m.contains("timing"));
  CHECK(io::model_kind(dir / "out/model") == "tt");
}

TEST_CASE("cli exit codes") {
  ScratchDir dir("codes");
  CHECK(tenkit_cli({}).code == 1);
  CHECK(tenkit_cli({"decompose", "--bogus"}).code == 1);
  CHECK(tenkit_cli({"decompose", "--method", "tt", "--eps", "1e-8", "--in", dir / "missing.ten", "--out", dir / "o"}).code == 2);

  io::write_ten(dir / "x.ten", DenseTensor(Shape({2, 2}), Vector::Ones(4)));
  CHECK(tenkit_cli({"decompose", "--method", "cpd", "--in", dir / "x.ten", "--out", dir / "o"}).code == 1);

  const Run big = tenkit_cli({"uq", "collocate", "--dims", "57", "--nodes", "3", "--oracle", "builtin:sum", "--out", dir / "u"});
  CHECK(big.code == 1);
  CHECK(big.err.find("1.6e+27") != std::string::npos);

  // dx/dt = x^2 from x0 = 5 leaves any finite range before t = 10.
  PolynomialSystem blow = PolynomialSystem::zeros(1, 0);
  blow.B(0, 0) = 1.0;
  io::write_system(dir.path / "blow", blow);
  const Run num = tenkit_cli({"mor", "simulate", "--system", dir / "blow", "--x0", "5", "--t-end", "10", "--out", dir / "s"});
  CHECK(num.code == 3);
  CHECK(fs::exists(dir.path / "s" / "diagnostic.json"));
  CHECK(!fs::exists(dir.path / "s" / "trajectory.csv"));
  CHECK(tenkit_cli({"selftest"}).code == 1);  // no suite linked into the test binary
}

TEST_CASE("cli seed defaults to TENKIT_SEED") {
  ScratchDir dir("seed");
  ::setenv("TENKIT_SEED", "77", 1);
  const Run r = tenkit_cli({"mor", "bench", "--q", "3,4", "--out", dir / "b"});
  ::unsetenv("TENKIT_SEED");
  REQUIRE(r.code == 0);
  CHECK(io::read_json(dir / "b/manifest.json")["seed"] == 77);
  CHECK(tenkit_cli({"mor", "bench", "--q", "3,4", "--seed", "5", "--out", dir / "c"}).code == 0);
  CHECK(io::read_json(dir / "c/manifest.json")["seed"] == 5);
}

TEST_CASE("cli external oracle agrees with the builtin") {
  ScratchDir dir("exec");
  const std::string script = dir / "oracle.sh";
  io::write_file_atomic(script, "#!/bin/sh\nawk '{ s = 0; for (i = 1; i <= NF; i++) s += $i; printf \"%.17g\\n\", s }'\n");
  fs::permissions(script, fs::perms::owner_all);
  const std::vector<std::string> common{"uq", "collocate", "--dims", "3", "--order", "1", "--mc-samples", "0"};
  auto with = [&](const std::string& oracle, const std::string& out) {
    auto args = common;
    args.insert(args.end(), {"--oracle", oracle, "--out", dir / out});
    return tenkit_cli(args);
  };
  REQUIRE(with("exec:" + script, "e").code == 0);
  REQUIRE(with("builtin:sum", "b").code == 0);
  const auto e = io::read_csv(dir / "e/coefficients.csv"), b = io::read_csv(dir / "b/coefficients.csv");
  REQUIRE(e.size() == b.size());
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(e[i].back() == doctest::Approx(b[i].back()).epsilon(1e-12));
  CHECK(with("exec:" + dir / "nope", "n").code == 2);
}

TEST_CASE("cli mor pipeline") {
  ScratchDir dir("mor");
  Rng rng(3);
  PolynomialSystem s = PolynomialSystem::zeros(5, 1);
  s.A = -2.0 * Matrix::Identity(5, 5);
  for (Index i = 0; i < 5; ++i) s.C(i, i * 31) = -0.2;
  s.E = rng.normal_matrix(5, 1);
  io::write_system(dir.path / "sys", s);
  REQUIRE(tenkit_cli({"mor", "tensorize", "--system", dir / "sys", "--out", dir / "t"}).code == 0);
  REQUIRE(tenkit_cli({"mor", "reduce", "--system", dir / "t", "--q", "2", "--input", "step:1", "--out", dir / "r"}).code == 0);
  REQUIRE(tenkit_cli({"mor", "simulate", "--system", dir / "r", "--input", "step:1", "--lift", "--out", dir / "s"}).code == 0);
  std::vector<std::string> header;
  const auto rows = io::read_csv(dir / "s/trajectory.csv", &header);
  CHECK(header == std::vector<std::string>{"t", "xhat_1", "xhat_2"});
  CHECK(rows.size() == 101);
  CHECK(io::read_json(dir / "r/manifest.json")["diagnostics"]["galerkin_defect"].get<double>() <= 1e-10);
  CHECK(tenkit_cli({"mor", "simulate", "--system", dir / "sys", "--input", "pulse:1", "--out", dir / "x"}).code == 1);
}
