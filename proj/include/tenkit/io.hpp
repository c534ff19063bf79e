#pragma once

// File formats shared by every module.
//
// ".ten" binary: 8-byte magic "TENKIT01", uint32 LE order d, d x uint64 LE
// extents, then prod(n_k) IEEE-754 float64 LE values in storage order.
// The JSON variant is {"shape": [...], "data": [...]} with the same order.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tenkit/tensor.hpp"

namespace tenkit::io {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr std::string_view kTenMagic = "TENKIT01";

std::string encode_ten(const DenseTensor& t);
DenseTensor decode_ten(std::string_view bytes);

void write_ten(const fs::path& path, const DenseTensor& t);
DenseTensor read_ten(const fs::path& path);

/// Matrices are stored as 2-way tensors.
void write_matrix(const fs::path& path, const Matrix& m);
Matrix read_matrix(const fs::path& path);

json tensor_to_json(const DenseTensor& t);
DenseTensor tensor_from_json(const json& j);

/// Shortest round-trippable decimal form ("%.17g").
std::string format_double(double x);

/// Writes to a sibling temporary then renames, so readers never see a partial file.
void write_file_atomic(const fs::path& path, std::string_view contents);
std::string read_file(const fs::path& path);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

/// Plain numeric CSV: a header row then one row per record.
void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);
std::vector<std::vector<double>> read_csv(const fs::path& path, std::vector<std::string>* header = nullptr);

}  // namespace tenkit::io
