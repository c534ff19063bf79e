#include <algorithm>
#include <cmath>

#include "tenkit/completion.hpp"
#include "tenkit/error.hpp"
#include "tenkit/io.hpp"

namespace tenkit {

SampleSet::SampleSet(Shape shape, std::vector<MultiIndex> indices, Vector values)
    : shape_(std::move(shape)), indices_(std::move(indices)), values_(std::move(values)) {
  if (indices_.empty()) throw ValidationError("sample set must contain at least one entry");
  if (static_cast<Index>(indices_.size()) != values_.size()) {
    throw DimensionError("sample set: " + std::to_string(indices_.size()) + " indices but " +
                         std::to_string(values_.size()) + " values");
  }
  if (!values_.allFinite()) throw ValidationError("sample values must be finite");
  std::vector<Index> offsets;
  offsets.reserve(indices_.size());
  for (const auto& idx : indices_) {
    if (idx.order() != shape_.order() || !in_range(shape_, idx)) {
      throw DimensionError("sample index out of range for shape " + shape_.to_string());
    }
    offsets.push_back(linear_index(shape_, idx));
  }
  std::sort(offsets.begin(), offsets.end());
  if (std::adjacent_find(offsets.begin(), offsets.end()) != offsets.end()) {
    throw ValidationError("sample set contains a repeated index");
  }
}

SampleSet SampleSet::subset(const std::vector<Index>& positions) const {
  std::vector<MultiIndex> idx;
  Vector vals(static_cast<Index>(positions.size()));
  for (std::size_t j = 0; j < positions.size(); ++j) {
    idx.push_back(indices_.at(static_cast<std::size_t>(positions[j])));
    vals[static_cast<Index>(j)] = values_[positions[j]];
  }
  return SampleSet(shape_, std::move(idx), std::move(vals));
}

SampleSet project_omega(const DenseTensor& a, const std::vector<MultiIndex>& omega) {
  Vector vals(static_cast<Index>(omega.size()));
  for (std::size_t j = 0; j < omega.size(); ++j) {
    if (!in_range(a.shape(), omega[j])) throw DimensionError("sample index out of range for shape " + a.shape().to_string());
    vals[static_cast<Index>(j)] = a(omega[j]);
  }
  return SampleSet(a.shape(), omega, std::move(vals));
}

std::vector<MultiIndex> all_indices(const Shape& shape) {
  std::vector<MultiIndex> out;
  out.reserve(static_cast<std::size_t>(shape.numel()));
  for (Index e = 0; e < shape.numel(); ++e) out.push_back(multi_index(shape, e));
  return out;
}

double residual_omega(const CPModel& x, const SampleSet& samples) {
  if (!(x.shape == samples.shape())) throw DimensionError("residual: model and samples differ in shape");
  double ss = 0.0;
  for (Index j = 0; j < samples.size(); ++j) {
    const double r = x.entry(samples.indices()[static_cast<std::size_t>(j)]) - samples.values()[j];
    ss += r * r;
  }
  return std::sqrt(ss);
}

double residual_omega(const DenseTensor& x, const SampleSet& samples) {
  if (!(x.shape() == samples.shape())) throw DimensionError("residual: tensor and samples differ in shape");
  double ss = 0.0;
  for (Index j = 0; j < samples.size(); ++j) {
    const double r = x(samples.indices()[static_cast<std::size_t>(j)]) - samples.values()[j];
    ss += r * r;
  }
  return std::sqrt(ss);
}

void write_samples_csv(const std::filesystem::path& path, const SampleSet& samples) {
  std::vector<std::string> header;
  for (int k = 1; k <= samples.shape().order(); ++k) header.push_back("i" + std::to_string(k));
  header.push_back("value");
  std::vector<std::vector<double>> rows;
  for (Index j = 0; j < samples.size(); ++j) {
    std::vector<double> row;
    for (Index i : samples.indices()[static_cast<std::size_t>(j)].values()) row.push_back(static_cast<double>(i));
    row.push_back(samples.values()[j]);
    rows.push_back(std::move(row));
  }
  io::write_csv(path, header, rows);
}

SampleSet read_samples_csv(const std::filesystem::path& path, const Shape& shape) {
  const auto rows = io::read_csv(path);
  const auto d = static_cast<std::size_t>(shape.order());
  std::vector<MultiIndex> idx;
  Vector vals(static_cast<Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != d + 1) {
      throw IoError(path.string() + ": row " + std::to_string(j + 1) + " has " + std::to_string(rows[j].size()) +
                    " columns, expected " + std::to_string(d + 1));
    }
    std::vector<Index> ii;
    for (std::size_t k = 0; k < d; ++k) {
      const double v = rows[j][k];
      if (v != std::floor(v)) throw IoError(path.string() + ": non-integer index in row " + std::to_string(j + 1));
      ii.push_back(static_cast<Index>(v));
    }
    idx.emplace_back(std::move(ii));
    vals[static_cast<Index>(j)] = rows[j][d];
  }
  return SampleSet(shape, std::move(idx), std::move(vals));
}

}  // namespace tenkit
