#pragma once

#include <limits>
#include <vector>

#include "macrobottle/cae/train.hpp"

namespace macrobottle::cae {

// One row per bottleneck index informative on both sides. Unpaired neurons
// (informative on one side only) are listed separately.
struct PairRow {
  Index neuron = 0;
  double a_xy = 0.0, b_xy = 0.0;  // net_x's map: X-bar_i -> Y-bar_i
  double a_yx = 0.0, b_yx = 0.0;  // net_y's map: Y-bar_i -> X-bar_i
  double cross_ev_y = 0.0;        // Y-bar_i predicted from X-bar_i
  double cross_ev_x = 0.0;        // X-bar_i predicted from Y-bar_i
};

struct PairTable {
  std::vector<PairRow> paired;
  std::vector<Index> unpaired_x;
  std::vector<Index> unpaired_y;
};

inline PairTable pair_table(const CaeModel& m, const Matrix& x, const Matrix& y,
                            const metrics::InformativeMask& mask_x,
                            const metrics::InformativeMask& mask_y) {
  const auto k = static_cast<std::size_t>(m.config.bottleneck_dim);
  if (mask_x.informative.size() != k || mask_y.informative.size() != k) {
    throw DimensionError("pair_table: masks do not match the bottleneck width");
  }
  PairTable t;
  const bool any = mask_x.count() > 0 || mask_y.count() > 0;
  if (!any) return t;
  if (m.config.cross_map != CrossMap::diagonal) {
    throw std::invalid_argument("pair_table: requires the diagonal cross-map");
  }
  const Encoding ex = encode(m.net_x, m.prepare_x(x));
  const Encoding ey = encode(m.net_y, m.prepare_y(y));
  const Matrix ybar_hat = cross_predict(m.net_x, ex.mu);
  const Matrix xbar_hat = cross_predict(m.net_y, ey.mu);
  for (std::size_t s = 0; s < k; ++s) {
    const auto i = static_cast<Index>(s);
    const bool ix = mask_x.informative[s], iy = mask_y.informative[s];
    if (ix && iy) {
      t.paired.push_back({i, m.net_x.params.value("cross.a")(0, i),
                          m.net_x.params.value("cross.b")(0, i), m.net_y.params.value("cross.a")(0, i),
                          m.net_y.params.value("cross.b")(0, i),
                          detail::ev_or_nan(ey.mu.col(i), ybar_hat.col(i)),
                          detail::ev_or_nan(ex.mu.col(i), xbar_hat.col(i))});
    } else if (ix) {
      t.unpaired_x.push_back(i);
    } else if (iy) {
      t.unpaired_y.push_back(i);
    }
  }
  return t;
}

}  // namespace macrobottle::cae
