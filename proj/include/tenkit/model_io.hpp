#pragma once

// On-disk layout for factored models: a directory holding model.json (kind,
// shape, ranks, weights, block names) and one ".ten" block per factor, core
// or coefficient matrix.

#include <filesystem>

#include "tenkit/decomp.hpp"
#include "tenkit/io.hpp"
#include "tenkit/mor.hpp"
#include "tenkit/uq.hpp"

namespace tenkit::io {

void write_model(const fs::path& dir, const CPModel& m);
void write_model(const fs::path& dir, const TuckerModel& m);
void write_model(const fs::path& dir, const TTModel& m);
void write_model(const fs::path& dir, const TTr1Model& m);
void write_model(const fs::path& dir, const SymmetricCPModel& m);

/// The "kind" field of dir/model.json.
std::string model_kind(const fs::path& dir);

CPModel read_cp_model(const fs::path& dir);
TuckerModel read_tucker_model(const fs::path& dir);
TTModel read_tt_model(const fs::path& dir);
TTr1Model read_ttr1_model(const fs::path& dir);
SymmetricCPModel read_symmetric_model(const fs::path& dir);

/// system.json naming A.ten ... E.ten; absent blocks read as zero.
void write_system(const fs::path& dir, const PolynomialSystem& s);
PolynomialSystem read_system(const fs::path& dir);

/// Tensorized or reduced factored systems. Input signals are not stored.
void write_factored_system(const fs::path& dir, const FactoredSystem& s, const Matrix* v = nullptr);
FactoredSystem read_factored_system(const fs::path& dir, Matrix* v = nullptr);

/// gPC expansion as one JSON document; custom measures keep their recurrence.
json expansion_to_json(const GpcExpansion& e);
GpcExpansion expansion_from_json(const json& j);

/// Rank-1 transforms as [{"weight": w, "vectors": [[...], ...]}, ...].
json rank1_list_to_json(const std::vector<Rank1Tensor>& list);
std::vector<Rank1Tensor> rank1_list_from_json(const json& j);

}  // namespace tenkit::io
