#pragma once

#include "macrobottle/dataset.hpp"

namespace macrobottle::dataio {

struct StandardizedPair {
  DatasetPair pair;
  ColumnStats x;
  ColumnStats y;
};

// Train-split statistics applied to every split. Constant columns pass
// through untouched and are flagged in the stats.
inline StandardizedPair standardize(const DatasetPair& p) {
  p.validate();
  std::vector<Index> rows = p.indices(Split::train);
  if (rows.empty()) throw DataError("standardize: the train split is empty");
  StandardizedPair out{p, column_stats(p.x, rows), column_stats(p.y, rows)};
  out.pair.x = out.x.apply(p.x);
  out.pair.y = out.y.apply(p.y);
  return out;
}

inline DatasetPair unstandardize(const StandardizedPair& s) {
  DatasetPair p = s.pair;
  p.x = s.x.invert(s.pair.x);
  p.y = s.y.invert(s.pair.y);
  return p;
}

}  // namespace macrobottle::dataio
