#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>

#include "criteria.hpp"

namespace tenkit::acceptance {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

namespace {

struct Criterion {
  int id;
  const char* title;
  std::function<void(Checker&)> body;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list{
      {1, "convention exactness", criterion_conventions},
      {2, "decomposition correctness", criterion_decompositions},
      {3, "storage accounting", criterion_storage},
      {4, "tensor completion", criterion_completion},
      {5, "UQ tensor-recovery collocation", criterion_uq},
      {6, "quadrature and basis", criterion_quadrature},
      {7, "hierarchical UQ", criterion_hierarchical},
      {8, "model order reduction", criterion_mor},
      {9, "Volterra response", criterion_volterra},
      {10, "CLI determinism", criterion_determinism},
  };
  return list;
}

}  // namespace

std::vector<Outcome> run_all(std::ostream& log, const std::vector<int>& only) {
  std::vector<Outcome> out;
  for (const Criterion& cr : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), cr.id) == only.end()) continue;
    Outcome o;
    o.id = cr.id;
    o.title = cr.title;
    Checker c;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.body(c);
      o.pass = c.ok();
      o.detail = c.detail();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    o.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char head[96];
    std::snprintf(head, sizeof head, "%s %2d  %-32s %7.2f s  ", o.pass ? "PASS" : "FAIL", o.id, o.title.c_str(), o.seconds);
    log << head << o.detail << std::endl;
    out.push_back(std::move(o));
  }
  return out;
}

bool run_selftest(std::ostream& log, nlohmann::json& report) {
  const auto outcomes = run_all(log);
  bool all = true;
  report = nlohmann::json::array();
  for (const Outcome& o : outcomes) {
    all = all && o.pass;
    report.push_back({{"id", o.id}, {"title", o.title}, {"pass", o.pass}, {"detail", o.detail}});
  }
  return all;
}

}  // namespace tenkit::acceptance
