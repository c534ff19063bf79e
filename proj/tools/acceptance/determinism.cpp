// Criterion 10: every CLI artifact is reproduced byte for byte (timings aside).

#include <filesystem>
#include <map>
#include <sstream>
#include <unistd.h>

#include "../cli/cli.hpp"
#include "criteria.hpp"
#include "tenkit/completion.hpp"
#include "tenkit/io.hpp"
#include "tenkit/model_io.hpp"
#include "tenkit/random.hpp"

namespace tenkit::acceptance {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

bool timing_column(const std::string& name) {
  return name == "speedup" || (name.size() > 8 && name.compare(name.size() - 8, 8, "_seconds") == 0);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::string strip_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  std::vector<bool> keep;
  bool header = true;
  while (std::getline(in, line)) {
    const auto cells = split(line);
    if (header) {
      for (const auto& h : cells) keep.push_back(!timing_column(h));
      header = false;
    }
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (i >= keep.size() || keep[i]) out += cells[i] + ",";
    out += "\n";
  }
  return out;
}

/// Relative path -> comparable content.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), root).generic_string();
    const std::string text = io::read_file(entry.path());
    const std::string ext = entry.path().extension().string();
    if (ext == ".json") {
      json j = json::parse(text);
      if (j.is_object()) j.erase("timing");
      out[rel] = j.dump();
    } else if (ext == ".csv") {
      out[rel] = strip_csv(text);
    } else {
      out[rel] = text;
    }
  }
  return out;
}

struct Inputs {
  fs::path tensor, rank1, samples, system;
};

Inputs write_inputs(const fs::path& dir) {
  fs::create_directories(dir);
  Rng rng(4242);
  Inputs in{dir / "t.ten", dir / "rank1.ten", dir / "samples.csv", dir / "system"};
  io::write_ten(in.tensor, DenseTensor(Shape({6, 5, 4}), rng.normal_vector(120)));

  Rank1Tensor r1;
  for (Index n : {4, 3, 5, 2}) r1.vectors.push_back(rng.normal_vector(n));
  io::write_ten(in.rank1, densify(r1));

  CPModel cp;
  cp.shape = Shape({10, 10, 10});
  cp.weights = Vector::Ones(2);
  for (int k = 0; k < 3; ++k) cp.factors.push_back(rng.normal_matrix(10, 2));
  std::vector<MultiIndex> omega;
  for (auto off : rng.sample_without_replacement(1000, 300)) omega.push_back(multi_index(cp.shape, off));
  write_samples_csv(in.samples, project_omega(densify(cp), omega));

  const Index n = 4;
  PolynomialSystem s = PolynomialSystem::zeros(n, 1);
  s.A = -2.0 * Matrix::Identity(n, n);
  for (Index i = 0; i < n; ++i) s.C(i, i + n * i + n * n * i) = -0.2;
  for (Index i = 0; i < n; ++i) s.B(i, ((i + 1) % n) * (n + 1)) = 0.1;
  s.E = rng.normal_matrix(n, 1);
  s.D = 0.05 * rng.normal_matrix(n, n);
  fs::create_directories(in.system);
  io::write_system(in.system, s);
  return in;
}

std::vector<std::pair<std::string, std::vector<std::string>>> commands(const Inputs& in, const fs::path& w) {
  const auto p = [&](const char* name) { return (w / name).string(); };
  return {
      {"decompose_cpd", {"decompose", "--method", "cpd", "--rank", "2", "--in", in.tensor.string(), "--seed", "11", "--out", p("decompose_cpd")}},
      {"decompose_tt", {"decompose", "--method", "tt", "--eps", "1e-8", "--in", in.rank1.string(), "--out", p("decompose_tt")}},
      {"decompose_ttr1", {"decompose", "--method", "ttr1", "--eps", "1e-3", "--in", in.tensor.string(), "--out", p("decompose_ttr1")}},
      {"complete", {"complete", "--method", "rank", "--samples", in.samples.string(), "--shape", "10,10,10", "--rank", "2",
                    "--seed", "5", "--out", p("complete")}},
      {"uq_collocate", {"uq", "collocate", "--dims", "6", "--order", "2", "--budget", "300", "--oracle", "builtin:poly6",
                        "--rank", "5", "--seed", "7", "--mc-samples", "20000", "--out", p("uq_collocate")}},
      {"uq_hier", {"uq", "hier", "--expansion", p("uq_collocate") + "/expansion.json", "--nodes", "3", "--count", "3",
                   "--out", p("uq_hier")}},
      {"mor_tensorize", {"mor", "tensorize", "--system", in.system.string(), "--out", p("mor_tensorize")}},
      {"mor_reduce", {"mor", "reduce", "--system", p("mor_tensorize"), "--q", "2", "--input", "sine:1,1", "--t-end", "2",
                      "--out", p("mor_reduce")}},
      {"mor_simulate", {"mor", "simulate", "--system", p("mor_reduce"), "--input", "sine:1,1", "--t-end", "2", "--lift",
                        "--integrator", "implicit-euler", "--out", p("mor_simulate")}},
      {"mor_bench", {"mor", "bench", "--q", "4,8", "--r", "3", "--seed", "3", "--out", p("mor_bench")}},
      {"volterra_simulate", {"volterra", "simulate", "--lowpass", "12,4", "--random", "90", "--rank", "4", "--seed", "9",
                             "--out", p("volterra_simulate")}},
      {"volterra_tradeoff", {"volterra", "tradeoff", "--lowpass", "12,4", "--random", "60", "--ranks", "1,2,4", "--runs",
                             "1", "--seed", "9", "--out", p("volterra_tradeoff")}},
  };
}

}  // namespace

void criterion_determinism(Checker& c) {
  const fs::path root = fs::temp_directory_path() / ("tenkit_determinism_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const Inputs in = write_inputs(root / "inputs");
  const fs::path work = root / "work";

  std::vector<std::map<std::string, std::string>> rounds;
  for (int round = 0; round < 2; ++round) {
    fs::remove_all(work);
    for (const auto& [name, args] : commands(in, work)) {
      std::ostringstream out, err;
      const int rc = cli::run(args, out, err);
      c.require(rc == 0, name + " exited " + std::to_string(rc) + ": " + err.str());
    }
    rounds.push_back(snapshot(work));
  }

  std::size_t files = 0;
  for (const auto& [path, content] : rounds[0]) {
    const auto it = rounds[1].find(path);
    c.require(it != rounds[1].end(), path + " missing in the second run");
    if (it != rounds[1].end()) c.require(it->second == content, path + " differs between runs");
    ++files;
  }
  c.require(rounds[0].size() == rounds[1].size(), "runs produced different file sets");

  const json tt = json::parse(rounds[0]["decompose_tt/manifest.json"]);
  bool rank_one = true;
  for (const auto& r : tt["diagnostics"]["ranks"]) rank_one = rank_one && r.get<Index>() == 1;
  c.require(rank_one, "TT of a rank-1 tensor reported ranks " + tt["diagnostics"]["ranks"].dump());

  const json uq = json::parse(rounds[0]["uq_collocate/manifest.json"]);
  c.require(uq["diagnostics"]["sample_indices"].size() == 300, "manifest lacks the 300 sample indices");
  c.require(uq.contains("seed"), "manifest lacks the seed");

  fs::remove_all(root);
  c.note(std::to_string(commands(in, work).size()) + " commands, " + std::to_string(files) + " artifacts identical");
}

}  // namespace tenkit::acceptance
