#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "macrobottle/errors.hpp"

namespace macrobottle {

using Index = Eigen::Index;

// Dense real matrix, row-major so that one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

using Rng = std::mt19937_64;

inline std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                         shape_string(b));
  }
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

// Copies the listed rows of `m` into a new matrix, in order.
inline Matrix gather_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (Index r = 0; r < out.rows(); ++r) {
    out.row(r) = m.row(rows[static_cast<std::size_t>(r)]);
  }
  return out;
}

inline Matrix column_matrix(std::span<const double> values) {
  Matrix out(static_cast<Index>(values.size()), 1);
  for (Index i = 0; i < out.rows(); ++i) out(i, 0) = values[static_cast<std::size_t>(i)];
  return out;
}

inline std::vector<double> column_vector(const Matrix& m, Index col) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, col);
  return out;
}

}  // namespace macrobottle
