#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "macrobottle/anm.hpp"
#include "macrobottle/cae/model.hpp"
#include "macrobottle/cae/train.hpp"
#include "macrobottle/dataio/csv.hpp"
#include "macrobottle/dataio/layout.hpp"

namespace macrobottle::dataio {

enum class Side { x, y };

inline const char* side_name(Side s) { return s == Side::x ? "x" : "y"; }

struct AnomalyGrid {
  Index k = 0;
  Matrix high;  // mean of the k samples with the largest value, minus the overall mean
  Matrix low;   // same for the k smallest
};

namespace detail {

inline Matrix reshape(const RowVector& v, const GridLayout& g) {
  Matrix out(g.rows, g.cols);
  for (Index r = 0; r < g.rows; ++r)
    for (Index c = 0; c < g.cols; ++c) out(r, c) = v(r * g.cols + c);
  return out;
}

// Mean over `rows` taken in ascending row order, so selecting every row
// reproduces the plain column mean bit for bit.
inline RowVector mean_of(const Matrix& data, std::vector<Index> rows) {
  std::sort(rows.begin(), rows.end());
  RowVector acc = RowVector::Zero(data.cols());
  for (Index r : rows) acc += data.row(r);
  return acc / static_cast<double>(rows.size());
}

}  // namespace detail

// Composite anomaly maps of `data` (n x rows*cols) keyed by `values` (n).
inline AnomalyGrid anomaly_grid(const Matrix& data, std::span<const double> values, const GridLayout& layout, Index k) {
  layout.check(data.cols(), "anomaly_grid");
  const Index n = data.rows();
  if (static_cast<Index>(values.size()) != n) throw DimensionError("anomaly_grid: one value per sample required");
  if (k < 1 || k > n) throw std::invalid_argument("anomaly_grid: k must lie in [1, n]");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
  });
  std::vector<Index> all(order);
  const RowVector mean = detail::mean_of(data, all);
  const auto kk = static_cast<std::ptrdiff_t>(k);
  const RowVector top = detail::mean_of(data, {order.begin(), order.begin() + kk});
  const RowVector bottom = detail::mean_of(data, {order.end() - kk, order.end()});
  return {k, detail::reshape(top - mean, layout), detail::reshape(bottom - mean, layout)};
}

// Anomaly maps of one side keyed by a bottleneck neuron's noiseless mean.
inline AnomalyGrid emit_anomaly_grid(const cae::CaeModel& m, const DatasetPair& p, const PairLayout& layout, Side side,
                                     Index neuron, Index k) {
  const bool on_x = side == Side::x;
  const Matrix& data = on_x ? p.x : p.y;
  const GridLayout& g = on_x ? layout.x : layout.y;
  g.check(data.cols(), std::string("layout of side ") + side_name(side));
  if (neuron < 0 || neuron >= m.config.bottleneck_dim) throw DimensionError("emit_anomaly_grid: no such neuron");
  const cae::Encoding e = on_x ? cae::encode(m.net_x, m.prepare_x(data)) : cae::encode(m.net_y, m.prepare_y(data));
  const Matrix v = e.mu.col(neuron);
  return anomaly_grid(data, std::span<const double>(v.data(), static_cast<std::size_t>(v.rows())), g, k);
}

inline void write_grid_csv(const fs::path& path, const Matrix& grid) { save_matrix_csv(path, grid, "col"); }

// ---- residual scatter --------------------------------------------------------

// Four column groups (raw x->y, raw y->x, transformed x->y, transformed
// y->x), each value, prediction, counterpart (the predictor) and residual.
inline std::vector<std::string> residual_scatter_header() {
  std::vector<std::string> h;
  for (const char* group : {"raw_xy", "raw_yx", "trans_xy", "trans_yx"})
    for (const char* col : {"value", "prediction", "counterpart", "residual"}) h.push_back(std::string(group) + "_" + col);
  return h;
}

inline Matrix residual_scatter(const anm::AnmVerdict& v) {
  const std::array<const anm::Residuals*, 4> groups = {&v.raw_xy, &v.raw_yx, &v.trans_xy, &v.trans_yx};
  const Index n = v.raw_xy.residual.rows();
  for (const auto* g : groups) {
    if (g->residual.rows() != n || n == 0) {
      throw DataError("residual_scatter: verdict lacks residuals for every direction");
    }
  }
  Matrix m(n, 16);
  for (std::size_t g = 0; g < 4; ++g) {
    const auto c = static_cast<Index>(4 * g);
    m.col(c) = groups[g]->effect;
    m.col(c + 1) = groups[g]->prediction;
    m.col(c + 2) = groups[g]->cause;
    m.col(c + 3) = groups[g]->residual;
  }
  return m;
}

inline void write_residual_scatter(const fs::path& path, const anm::AnmVerdict& v) {
  write_csv(path, residual_scatter_header(), residual_scatter(v));
}

}  // namespace macrobottle::dataio
