#include "tenkit/io.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tenkit::io {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw IoError("truncated .ten stream");
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, bytes.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  pos += sizeof(T);
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

}  // namespace

std::string encode_ten(const DenseTensor& t) {
  std::string out;
  out.reserve(kTenMagic.size() + 4 + 8 * t.order() + 8 * static_cast<std::size_t>(t.size()));
  out.append(kTenMagic);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.order()));
  for (Index n : t.shape().dims()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(n));
  for (Index i = 0; i < t.size(); ++i) put_le<double>(out, t[i]);
  return out;
}

DenseTensor decode_ten(std::string_view bytes) {
  if (bytes.substr(0, kTenMagic.size()) != kTenMagic) throw IoError("not a .ten stream (bad magic)");
  std::size_t pos = kTenMagic.size();
  const auto order = get_le<std::uint32_t>(bytes, pos);
  if (order == 0) throw IoError(".ten stream declares order 0");
  std::vector<Index> dims(order);
  for (auto& n : dims) {
    const auto raw = get_le<std::uint64_t>(bytes, pos);
    if (raw == 0 || raw > static_cast<std::uint64_t>(std::numeric_limits<Index>::max())) {
      throw IoError(".ten stream has an invalid extent");
    }
    n = static_cast<Index>(raw);
  }
  Shape shape(std::move(dims));
  if ((bytes.size() - pos) / 8 != static_cast<std::size_t>(shape.numel()) || (bytes.size() - pos) % 8 != 0) {
    throw IoError(".ten payload length does not match its shape " + shape.to_string());
  }
  Vector data(shape.numel());
  for (Index i = 0; i < data.size(); ++i) data[i] = get_le<double>(bytes, pos);
  return DenseTensor(std::move(shape), std::move(data));
}

void write_ten(const fs::path& path, const DenseTensor& t) { write_file_atomic(path, encode_ten(t)); }

DenseTensor read_ten(const fs::path& path) { return decode_ten(read_file(path)); }

void write_matrix(const fs::path& path, const Matrix& m) {
  Vector flat = Eigen::Map<const Vector>(m.data(), m.size());
  write_ten(path, DenseTensor(Shape{m.rows(), m.cols()}, std::move(flat)));
}

Matrix read_matrix(const fs::path& path) {
  DenseTensor t = read_ten(path);
  if (t.order() == 1) return t.data();
  if (t.order() != 2) throw IoError(path.string() + ": expected a 2-way tensor");
  return Eigen::Map<const Matrix>(t.data().data(), t.shape().dims()[0], t.shape().dims()[1]);
}

json tensor_to_json(const DenseTensor& t) {
  json j;
  j["shape"] = t.shape().dims();
  std::vector<double> data(t.data().begin(), t.data().end());
  j["data"] = std::move(data);
  return j;
}

DenseTensor tensor_from_json(const json& j) {
  try {
    auto dims = j.at("shape").get<std::vector<Index>>();
    auto data = j.at("data").get<std::vector<double>>();
    Shape shape(std::move(dims));
    return DenseTensor(std::move(shape), Eigen::Map<const Vector>(data.data(), static_cast<Index>(data.size())));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed tensor JSON: ") + e.what());
  }
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<std::vector<double>> read_csv(const fs::path& path, std::vector<std::string>* header) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      first = false;
      char* end = nullptr;
      std::strtod(cells.empty() ? "" : cells[0].c_str(), &end);
      const bool numeric = !cells.empty() && end && *end == '\0' && !cells[0].empty();
      if (!numeric) {
        if (header) *header = cells;
        continue;
      }
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0') throw IoError(path.string() + ": non-numeric CSV cell '" + c + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace tenkit::io
