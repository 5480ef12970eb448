#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "macrobottle/dataset.hpp"

namespace macrobottle::dataio {

namespace fs = std::filesystem;

// Shortest form is not enough for a documented format; 17 significant
// digits round-trip every double exactly.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string unquote(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

inline std::ofstream open_for_writing(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  return out;
}

}  // namespace detail

inline void write_csv(const fs::path& path, const std::vector<std::string>& header, const Matrix& values) {
  if (static_cast<Index>(header.size()) != values.cols()) {
    throw DimensionError(path.string() + ": header has " + std::to_string(header.size()) + " names for " +
                         std::to_string(values.cols()) + " columns");
  }
  auto out = detail::open_for_writing(path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
  if (!out) throw DataError(path.string() + ": write failed");
}

// Header row, then one row of decimal reals per sample. Errors name the file
// and the 1-based line.
inline CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string() + ": cannot open for reading");
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> DataError {
    return DataError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };
  if (!std::getline(in, line)) {
    line_no = 1;
    throw fail("missing header row");
  }
  line_no = 1;
  for (auto f : detail::split_fields(line)) t.header.push_back(detail::unquote(f));
  const std::size_t cols = t.header.size();
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != cols) {
      throw fail("expected " + std::to_string(cols) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      const std::string_view f = fields[j];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || f.empty()) {
        throw fail("field " + std::to_string(j + 1) + " is not a number: '" + std::string(f) + "'");
      }
      if (!std::isfinite(v)) throw fail("field " + std::to_string(j + 1) + " is not finite");
      data.push_back(v);
    }
    ++rows;
  }
  t.values.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) t.values(static_cast<Index>(i), static_cast<Index>(j)) = data[i * cols + j];
  return t;
}

inline std::vector<std::string> numbered_header(const std::string& prefix, Index count) {
  std::vector<std::string> h;
  for (Index j = 0; j < count; ++j) h.push_back(prefix + std::to_string(j));
  return h;
}

inline void save_matrix_csv(const fs::path& path, const Matrix& m, const std::string& prefix = "c") {
  write_csv(path, numbered_header(prefix, m.cols()), m);
}

inline Matrix load_matrix_csv(const fs::path& path) { return read_csv(path).values; }

// Row-aligned pair from two CSV files. Split labels are a pure function of
// (rows, seed, fractions).
inline DatasetPair load_pair_csv(const fs::path& path_x, const fs::path& path_y, std::uint64_t seed = 0,
                                 SplitFractions fractions = {}) {
  DatasetPair p;
  p.x = load_matrix_csv(path_x);
  p.y = load_matrix_csv(path_y);
  if (p.x.rows() != p.y.rows()) {
    throw DataError("row-count mismatch: " + path_x.string() + " has " + std::to_string(p.x.rows()) + " rows, " +
                    path_y.string() + " has " + std::to_string(p.y.rows()));
  }
  if (p.x.rows() == 0) throw DataError(path_x.string() + ": no data rows");
  p.split = make_split(p.x.rows(), seed, fractions);
  return p;
}

inline void save_pair_csv(const DatasetPair& p, const fs::path& path_x, const fs::path& path_y) {
  save_matrix_csv(path_x, p.x, "x");
  save_matrix_csv(path_y, p.y, "y");
}

// ---- ground truth ----------------------------------------------------------

inline const std::vector<std::string>& ground_truth_header() {
  static const std::vector<std::string> h = {"c1", "x1", "x2", "y1", "y2", "noise_x1", "noise_y1", "noise_y2", "split"};
  return h;
}

inline void save_ground_truth_csv(const fs::path& path, const GroundTruthRecord& t, const std::vector<Split>& split) {
  const auto n = static_cast<Index>(t.size());
  if (static_cast<Index>(split.size()) != n) throw DataError("ground truth and split labels differ in length");
  Matrix m(n, 9);
  for (Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    m.row(i) << t.c1[s], t.x1[s], t.x2[s], t.y1[s], t.y2[s], t.noise_x1[s], t.noise_y1[s], t.noise_y2[s],
        static_cast<double>(split[s]);
  }
  write_csv(path, ground_truth_header(), m);
}

struct GroundTruthFile {
  GroundTruthRecord truth;
  std::vector<Split> split;
};

inline GroundTruthFile load_ground_truth_csv(const fs::path& path, const std::string& model) {
  const CsvTable t = read_csv(path);
  if (t.header != ground_truth_header()) throw DataError(path.string() + ": unexpected ground-truth columns");
  GroundTruthFile g;
  g.truth.model = model;
  auto col = [&t](Index j) {
    std::vector<double> v(static_cast<std::size_t>(t.values.rows()));
    for (Index i = 0; i < t.values.rows(); ++i) v[static_cast<std::size_t>(i)] = t.values(i, j);
    return v;
  };
  g.truth.c1 = col(0);
  g.truth.x1 = col(1);
  g.truth.x2 = col(2);
  g.truth.y1 = col(3);
  g.truth.y2 = col(4);
  g.truth.noise_x1 = col(5);
  g.truth.noise_y1 = col(6);
  g.truth.noise_y2 = col(7);
  for (Index i = 0; i < t.values.rows(); ++i) {
    const double s = t.values(i, 8);
    if (s != 0.0 && s != 1.0 && s != 2.0) {
      throw DataError(path.string() + ":" + std::to_string(i + 2) + ": split must be 0, 1 or 2");
    }
    g.split.push_back(static_cast<Split>(static_cast<int>(s)));
  }
  return g;
}

}  // namespace macrobottle::dataio
