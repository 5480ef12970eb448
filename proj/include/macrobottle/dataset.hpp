#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "macrobottle/diffcore/matrix.hpp"

namespace macrobottle {

enum class Split : std::uint8_t { train, val, test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

struct SplitFractions {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  void validate() const {
    if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9) {
      throw DataError("split fractions must be non-negative and sum to 1");
    }
  }
};

// Latent values behind a synthetic sample, before pixel noise.
struct GroundTruthRecord {
  std::string model;  // "main" or "asymmetric"
  std::vector<double> c1, x1, x2, y1, y2;
  std::vector<double> noise_x1, noise_y1, noise_y2;

  [[nodiscard]] std::size_t size() const { return x1.size(); }
};

// Row-aligned samples of the two high-dimensional variables.
struct DatasetPair {
  Matrix x;
  Matrix y;
  std::vector<Split> split;
  std::optional<GroundTruthRecord> truth;

  [[nodiscard]] Index size() const { return x.rows(); }

  void validate() const {
    if (x.rows() == 0) throw DataError("dataset is empty");
    if (x.rows() != y.rows()) {
      throw DataError("X has " + std::to_string(x.rows()) + " rows but Y has " +
                      std::to_string(y.rows()));
    }
    if (static_cast<Index>(split.size()) != x.rows()) throw DataError("split labels misaligned");
    if (truth && static_cast<Index>(truth->size()) != x.rows()) {
      throw DataError("ground truth misaligned with samples");
    }
  }

  [[nodiscard]] std::vector<Index> indices(Split s) const {
    std::vector<Index> out;
    for (Index i = 0; i < static_cast<Index>(split.size()); ++i) {
      if (split[static_cast<std::size_t>(i)] == s) out.push_back(i);
    }
    return out;
  }
};

// Per-column affine scaling (x - mean) / stddev. Constant columns keep
// mean 0 and stddev 1, so they pass through untouched.
struct ColumnStats {
  RowVector mean;
  RowVector stddev;
  std::vector<bool> constant;

  [[nodiscard]] Matrix apply(const Matrix& m) const {
    if (m.cols() != mean.cols()) throw DimensionError("ColumnStats::apply: column count mismatch");
    return ((m.rowwise() - mean).array().rowwise() / stddev.array()).matrix();
  }
  [[nodiscard]] Matrix invert(const Matrix& m) const {
    if (m.cols() != mean.cols()) throw DimensionError("ColumnStats::invert: column count mismatch");
    return ((m.array().rowwise() * stddev.array()).matrix().rowwise() + mean);
  }
  [[nodiscard]] Index constant_count() const {
    return static_cast<Index>(std::count(constant.begin(), constant.end(), true));
  }
};

// Statistics over the given rows (population standard deviation).
inline ColumnStats column_stats(const Matrix& m, std::span<const Index> rows) {
  if (rows.empty()) throw DataError("column_stats: no rows");
  ColumnStats s{RowVector::Zero(m.cols()), RowVector::Ones(m.cols()),
                std::vector<bool>(static_cast<std::size_t>(m.cols()), false)};
  const Matrix sub = gather_rows(m, rows);
  const RowVector mu = sub.colwise().mean();
  for (Index j = 0; j < m.cols(); ++j) {
    const double var = (sub.col(j).array() - mu(j)).square().mean();
    if (var > 0.0 && std::isfinite(var)) {
      s.mean(j) = mu(j);
      s.stddev(j) = std::sqrt(var);
    } else {
      s.constant[static_cast<std::size_t>(j)] = true;
    }
  }
  return s;
}

// Assigns split labels as a pure function of (n, seed, fractions): a seeded
// permutation, whose first floor(n*train) entries are train, the next
// floor(n*val) validation, and the remainder test.
inline std::vector<Split> make_split(Index n, std::uint64_t seed, SplitFractions f = {}) {
  f.validate();
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed ^ 0x5851f42d4c957f2dULL);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<Index>(std::floor(static_cast<double>(n) * f.train));
  const auto n_val = static_cast<Index>(std::floor(static_cast<double>(n) * f.val));
  std::vector<Split> out(static_cast<std::size_t>(n), Split::test);
  for (Index i = 0; i < n; ++i) {
    const Split s = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
    out[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = s;
  }
  return out;
}

}  // namespace macrobottle
