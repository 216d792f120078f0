#pragma once

#include <algorithm>
#include <cstddef>
#include <span>

#include "jcf/linalg.hpp"

namespace jcf {

// The M local d-dimensional features extracted for one sample.
// Conceptually the d x M matrix X; stored one location per row so each
// feature column is contiguous.
class FeatureSet {
 public:
  FeatureSet() = default;
  FeatureSet(std::size_t dim, std::size_t count) : locations_(count, dim) {}

  // From the d x M column layout.
  static FeatureSet from_columns(const Matrix& columns) {
    FeatureSet fs;
    fs.locations_ = columns.transpose();
    return fs;
  }

  // From an M x d matrix whose rows are the local features.
  static FeatureSet from_locations(Matrix locations) {
    FeatureSet fs;
    fs.locations_ = std::move(locations);
    return fs;
  }

  std::size_t dim() const noexcept { return locations_.cols(); }
  std::size_t count() const noexcept { return locations_.rows(); }

  std::span<const double> column(std::size_t m) const { return locations_.row(m); }
  std::span<double> column(std::size_t m) { return locations_.row(m); }

  Matrix as_columns() const { return locations_.transpose(); }
  const Matrix& locations() const noexcept { return locations_; }
  Matrix& locations() noexcept { return locations_; }

  // Columns concatenated: X1 || X2.
  static FeatureSet concat(const FeatureSet& a, const FeatureSet& b) {
    if (a.dim() != b.dim()) throw ShapeError("FeatureSet::concat: dimension mismatch");
    Matrix m(a.count() + b.count(), a.dim());
    std::copy(a.locations_.span().begin(), a.locations_.span().end(), m.data());
    std::copy(b.locations_.span().begin(), b.locations_.span().end(),
              m.data() + a.locations_.size());
    return from_locations(std::move(m));
  }

  bool operator==(const FeatureSet&) const = default;

 private:
  Matrix locations_;
};

}  // namespace jcf
