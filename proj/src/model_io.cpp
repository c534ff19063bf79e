#include "tenkit/model_io.hpp"

#include "tenkit/error.hpp"

namespace tenkit::io {

namespace {

std::vector<double> to_std(const Vector& v) { return {v.begin(), v.end()}; }

Vector from_std(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())); }

std::string block(const std::string& stem, std::size_t k) { return stem + "_" + std::to_string(k + 1) + ".ten"; }

void write_manifest(const fs::path& dir, const json& j) { write_json(dir / "model.json", j); }

json read_manifest(const fs::path& dir, const std::string& kind) {
  json j = read_json(dir / "model.json");
  if (j.value("kind", std::string()) != kind) {
    throw IoError((dir / "model.json").string() + ": expected kind '" + kind + "', found '" + j.value("kind", std::string()) + "'");
  }
  return j;
}

template <typename T>
T field(const json& j, const char* key, const fs::path& dir) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError((dir / "model.json").string() + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

void write_model(const fs::path& dir, const CPModel& m) {
  json j;
  j["kind"] = "cp";
  j["shape"] = m.shape.dims();
  j["rank"] = m.rank();
  j["weights"] = to_std(m.weights);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < m.factors.size(); ++k) {
    names.push_back(block("factor", k));
    write_matrix(dir / names.back(), m.factors[k]);
  }
  j["factors"] = names;
  write_manifest(dir, j);
}

CPModel read_cp_model(const fs::path& dir) {
  const json j = read_manifest(dir, "cp");
  CPModel m;
  m.shape = Shape(field<std::vector<Index>>(j, "shape", dir));
  m.weights = from_std(field<std::vector<double>>(j, "weights", dir));
  for (const auto& name : field<std::vector<std::string>>(j, "factors", dir)) m.factors.push_back(read_matrix(dir / name));
  if (static_cast<int>(m.factors.size()) != m.shape.order()) throw IoError(dir.string() + ": factor count differs from the order");
  for (int k = 0; k < m.shape.order(); ++k) {
    const Matrix& f = m.factors[static_cast<std::size_t>(k)];
    if (f.rows() != m.shape.extent(k + 1) || f.cols() != m.rank()) throw IoError(dir.string() + ": factor " + std::to_string(k + 1) + " has the wrong size");
  }
  return m;
}

void write_model(const fs::path& dir, const TuckerModel& m) {
  json j;
  j["kind"] = "tucker";
  j["shape"] = m.shape().dims();
  j["ranks"] = m.multilinear_rank();
  j["hosvd"] = m.hosvd;
  write_ten(dir / "core.ten", m.core);
  j["core"] = "core.ten";
  std::vector<std::string> names;
  for (std::size_t k = 0; k < m.factors.size(); ++k) {
    names.push_back(block("factor", k));
    write_matrix(dir / names.back(), m.factors[k]);
  }
  j["factors"] = names;
  if (!m.mode_singular_values.empty()) {
    json sv = json::array();
    for (const auto& s : m.mode_singular_values) sv.push_back(to_std(s));
    j["mode_singular_values"] = sv;
  }
  write_manifest(dir, j);
}

TuckerModel read_tucker_model(const fs::path& dir) {
  const json j = read_manifest(dir, "tucker");
  TuckerModel m;
  m.core = read_ten(dir / field<std::string>(j, "core", dir));
  for (const auto& name : field<std::vector<std::string>>(j, "factors", dir)) m.factors.push_back(read_matrix(dir / name));
  m.hosvd = j.value("hosvd", false);
  if (j.contains("mode_singular_values")) {
    for (const auto& s : j["mode_singular_values"]) m.mode_singular_values.push_back(from_std(s.get<std::vector<double>>()));
  }
  if (static_cast<int>(m.factors.size()) != m.core.order()) throw IoError(dir.string() + ": factor count differs from the core order");
  return m;
}

void write_model(const fs::path& dir, const TTModel& m) {
  json j;
  j["kind"] = "tt";
  j["shape"] = m.shape().dims();
  j["ranks"] = m.ranks();
  std::vector<std::string> names;
  for (std::size_t k = 0; k < m.cores.size(); ++k) {
    names.push_back(block("core", k));
    write_ten(dir / names.back(), m.cores[k]);
  }
  j["cores"] = names;
  write_manifest(dir, j);
}

TTModel read_tt_model(const fs::path& dir) {
  const json j = read_manifest(dir, "tt");
  TTModel m;
  for (const auto& name : field<std::vector<std::string>>(j, "cores", dir)) {
    DenseTensor c = read_ten(dir / name);
    if (c.order() == 2) c = reshape(c, Shape({c.shape().extent(1), c.shape().extent(2), 1}));
    if (c.order() != 3) throw IoError(dir.string() + ": TT core " + name + " is not 3-way");
    m.cores.push_back(std::move(c));
  }
  for (std::size_t k = 1; k < m.cores.size(); ++k) {
    if (m.cores[k].shape().extent(1) != m.cores[k - 1].shape().extent(3)) throw IoError(dir.string() + ": TT ranks do not chain");
  }
  return m;
}

void write_model(const fs::path& dir, const TTr1Model& m) {
  json j;
  j["kind"] = "ttr1";
  j["shape"] = m.shape.dims();
  std::vector<double> sigma;
  for (const auto& t : m.terms) sigma.push_back(t.sigma);
  j["sigma"] = sigma;
  std::vector<std::string> names;
  for (int k = 0; k < m.shape.order(); ++k) {
    Matrix v(m.shape.extent(k + 1), static_cast<Index>(m.terms.size()));
    for (std::size_t t = 0; t < m.terms.size(); ++t) v.col(static_cast<Index>(t)) = m.terms[t].vectors[static_cast<std::size_t>(k)];
    names.push_back(block("vectors", static_cast<std::size_t>(k)));
    if (!m.terms.empty()) write_matrix(dir / names.back(), v);
  }
  j["vectors"] = names;
  write_manifest(dir, j);
}

TTr1Model read_ttr1_model(const fs::path& dir) {
  const json j = read_manifest(dir, "ttr1");
  TTr1Model m;
  m.shape = Shape(field<std::vector<Index>>(j, "shape", dir));
  const auto sigma = field<std::vector<double>>(j, "sigma", dir);
  const auto names = field<std::vector<std::string>>(j, "vectors", dir);
  if (static_cast<int>(names.size()) != m.shape.order()) throw IoError(dir.string() + ": vector block count differs from the order");
  m.terms.resize(sigma.size());
  for (std::size_t t = 0; t < sigma.size(); ++t) m.terms[t].sigma = sigma[t];
  if (sigma.empty()) return m;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const Matrix v = read_matrix(dir / names[k]);
    if (v.cols() != static_cast<Index>(sigma.size())) throw IoError(dir.string() + ": vector block has the wrong width");
    for (std::size_t t = 0; t < sigma.size(); ++t) m.terms[t].vectors.push_back(v.col(static_cast<Index>(t)));
  }
  return m;
}

void write_model(const fs::path& dir, const SymmetricCPModel& m) {
  json j;
  j["kind"] = "cp-sym";
  j["order"] = m.order;
  j["shape"] = std::vector<Index>(static_cast<std::size_t>(m.order), m.vectors.rows());
  j["rank"] = m.rank();
  j["lambda"] = to_std(m.lambda);
  write_matrix(dir / "vectors.ten", m.vectors);
  j["vectors"] = "vectors.ten";
  write_manifest(dir, j);
}

SymmetricCPModel read_symmetric_model(const fs::path& dir) {
  const json j = read_manifest(dir, "cp-sym");
  SymmetricCPModel m;
  m.order = field<int>(j, "order", dir);
  m.lambda = from_std(field<std::vector<double>>(j, "lambda", dir));
  m.vectors = read_matrix(dir / field<std::string>(j, "vectors", dir));
  if (m.vectors.cols() != m.lambda.size()) throw IoError(dir.string() + ": symmetric vectors and lambda disagree");
  return m;
}

std::string model_kind(const fs::path& dir) {
  const json j = read_json(dir / "model.json");
  return j.value("kind", std::string());
}

void write_system(const fs::path& dir, const PolynomialSystem& s) {
  s.validate();
  json j;
  j["kind"] = "polynomial-system";
  j["n"] = s.n;
  j["m"] = s.m;
  auto put = [&](const char* name, const Matrix& mat) {
    if (mat.size() == 0) return;
    const std::string file = std::string(name) + ".ten";
    write_matrix(dir / file, mat);
    j[name] = file;
  };
  put("A", s.A);
  put("B", s.B);
  put("C", s.C);
  put("D", s.D);
  put("E", s.E);
  write_json(dir / "system.json", j);
}

PolynomialSystem read_system(const fs::path& dir) {
  const json j = read_json(dir / "system.json");
  Index n = 0, m = 0;
  try {
    n = j.at("n").get<Index>();
    m = j.value("m", Index{0});
  } catch (const json::exception& e) {
    throw IoError((dir / "system.json").string() + ": " + e.what());
  }
  PolynomialSystem s = PolynomialSystem::zeros(n, m);
  auto get = [&](const char* name, Matrix& mat) {
    if (!j.contains(name) || j[name].is_null()) return;
    const Matrix loaded = read_matrix(dir / j[name].get<std::string>());
    if (loaded.rows() != mat.rows() || loaded.cols() != mat.cols()) {
      throw IoError((dir / j[name].get<std::string>()).string() + ": block " + name + " has the wrong size");
    }
    mat = loaded;
  };
  get("A", s.A);
  get("B", s.B);
  get("C", s.C);
  get("D", s.D);
  get("E", s.E);
  s.validate();
  return s;
}

namespace {

const char* kind_name(FactoredTerm::Kind k) {
  switch (k) {
    case FactoredTerm::Kind::quadratic:
      return "quadratic";
    case FactoredTerm::Kind::cubic:
      return "cubic";
    case FactoredTerm::Kind::bilinear:
      return "bilinear";
  }
  return "";
}

FactoredTerm::Kind kind_from(const std::string& s) {
  if (s == "quadratic") return FactoredTerm::Kind::quadratic;
  if (s == "cubic") return FactoredTerm::Kind::cubic;
  if (s == "bilinear") return FactoredTerm::Kind::bilinear;
  throw IoError("unknown factored term kind '" + s + "'");
}

}  // namespace

void write_factored_system(const fs::path& dir, const FactoredSystem& s, const Matrix* v) {
  json j;
  j["kind"] = "factored-system";
  j["states"] = s.states();
  j["inputs"] = s.inputs();
  write_matrix(dir / "A.ten", s.A);
  j["A"] = "A.ten";
  if (s.inputs() > 0) {
    write_matrix(dir / "E.ten", s.E);
    j["E"] = "E.ten";
  }
  json terms = json::array();
  for (const FactoredTerm& t : s.terms) {
    const std::string sub = std::string("term_") + kind_name(t.kind);
    write_model(dir / sub, t.cp);
    terms.push_back({{"kind", kind_name(t.kind)}, {"shared", t.shared}, {"fit_error", t.fit_error}, {"model", sub}});
  }
  j["terms"] = terms;
  if (v) {
    write_matrix(dir / "V.ten", *v);
    j["V"] = "V.ten";
  }
  write_json(dir / "system.json", j);
}

FactoredSystem read_factored_system(const fs::path& dir, Matrix* v) {
  const json j = read_json(dir / "system.json");
  if (j.value("kind", std::string()) != "factored-system") throw IoError((dir / "system.json").string() + ": not a factored system");
  FactoredSystem s;
  try {
    const auto n = j.at("states").get<Index>();
    const auto m = j.at("inputs").get<Index>();
    s.A = read_matrix(dir / j.at("A").get<std::string>());
    s.E = m > 0 ? read_matrix(dir / j.at("E").get<std::string>()) : Matrix(n, 0);
    if (s.A.rows() != n || s.A.cols() != n || s.E.rows() != n || s.E.cols() != m) throw IoError(dir.string() + ": A or E has the wrong size");
    for (const auto& t : j.at("terms")) {
      FactoredTerm term;
      term.kind = kind_from(t.at("kind").get<std::string>());
      term.shared = t.at("shared").get<bool>();
      term.fit_error = t.at("fit_error").get<double>();
      term.cp = read_cp_model(dir / t.at("model").get<std::string>());
      if (term.cp.order() != term.state_modes() + 1 + (term.kind == FactoredTerm::Kind::bilinear ? 1 : 0) ||
          term.cp.shape.extent(1) != n) {
        throw IoError(dir.string() + ": term '" + t.at("kind").get<std::string>() + "' has the wrong shape");
      }
      s.terms.push_back(std::move(term));
    }
    if (v && j.contains("V")) *v = read_matrix(dir / j.at("V").get<std::string>());
  } catch (const json::exception& e) {
    throw IoError((dir / "system.json").string() + ": " + e.what());
  }
  return s;
}

namespace {

json measure_to_json(const Measure& m) {
  switch (m.kind()) {
    case Measure::Kind::gaussian:
      return "gaussian";
    case Measure::Kind::uniform:
      return "uniform";
    case Measure::Kind::custom: {
      const Recurrence r = m.recurrence(m.max_size());
      return {{"kind", "custom"}, {"alpha", to_std(r.alpha)}, {"beta", to_std(r.beta)}};
    }
  }
  return nullptr;
}

Measure measure_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "gaussian") return Measure::gaussian();
    if (s == "uniform") return Measure::uniform();
    throw IoError("unknown measure '" + s + "'");
  }
  Recurrence r;
  r.alpha = from_std(j.at("alpha").get<std::vector<double>>());
  r.beta = from_std(j.at("beta").get<std::vector<double>>());
  return Measure::custom(std::move(r));
}

}  // namespace

json expansion_to_json(const GpcExpansion& e) {
  json j;
  j["kind"] = "gpc";
  json measures = json::array();
  for (const Measure& m : e.measures) measures.push_back(measure_to_json(m));
  j["measures"] = measures;
  j["order"] = e.order;
  j["multi_indices"] = e.multi_indices;
  j["coefficients"] = to_std(e.coefficients);
  return j;
}

GpcExpansion expansion_from_json(const json& j) {
  GpcExpansion e;
  try {
    if (j.value("kind", std::string()) != "gpc") throw IoError("not a gPC expansion");
    for (const auto& m : j.at("measures")) e.measures.push_back(measure_from_json(m));
    e.order = j.at("order").get<int>();
    e.multi_indices = j.at("multi_indices").get<std::vector<std::vector<int>>>();
    e.coefficients = from_std(j.at("coefficients").get<std::vector<double>>());
  } catch (const json::exception& ex) {
    throw IoError(std::string("gPC expansion: ") + ex.what());
  }
  if (e.multi_indices.size() != static_cast<std::size_t>(e.coefficients.size())) {
    throw IoError("gPC expansion: coefficient and multi-index counts differ");
  }
  for (const auto& a : e.multi_indices) {
    if (a.size() != e.measures.size()) throw IoError("gPC expansion: multi-index of the wrong length");
  }
  return e;
}

json rank1_list_to_json(const std::vector<Rank1Tensor>& list) {
  json out = json::array();
  for (const Rank1Tensor& t : list) {
    json vs = json::array();
    for (const Vector& v : t.vectors) vs.push_back(to_std(v));
    out.push_back({{"weight", t.weight}, {"vectors", vs}});
  }
  return out;
}

std::vector<Rank1Tensor> rank1_list_from_json(const json& j) {
  std::vector<Rank1Tensor> out;
  try {
    for (const auto& item : j) {
      Rank1Tensor t;
      t.weight = item.value("weight", 1.0);
      for (const auto& v : item.at("vectors")) t.vectors.push_back(from_std(v.get<std::vector<double>>()));
      out.push_back(std::move(t));
    }
  } catch (const json::exception& ex) {
    throw IoError(std::string("rank-1 list: ") + ex.what());
  }
  return out;
}

}  // namespace tenkit::io
