#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "macrobottle/dataio/csv.hpp"
#include "macrobottle/dataio/layout.hpp"

// A dataset directory holds X.csv and Y.csv (one flattened sample per row),
// an optional layout.json and, for generated data, ground_truth.csv whose
// split column fixes the split labels.
namespace macrobottle::dataio {

struct DatasetDir {
  DatasetPair pair;
  std::optional<PairLayout> layout;
};

inline void save_dataset_dir(const fs::path& dir, const DatasetPair& p, const PairLayout& layout) {
  p.validate();
  fs::create_directories(dir);
  save_pair_csv(p, dir / "X.csv", dir / "Y.csv");
  if (p.truth) save_ground_truth_csv(dir / "ground_truth.csv", *p.truth, p.split);
  save_layout(dir / "layout.json", layout);
}

inline DatasetDir load_dataset_dir(const fs::path& dir, std::uint64_t seed = 0) {
  if (!fs::is_directory(dir)) throw DataError(dir.string() + ": not a directory");
  DatasetDir d;
  d.pair = load_pair_csv(dir / "X.csv", dir / "Y.csv", seed);
  if (fs::exists(dir / "layout.json")) d.layout = load_layout(dir / "layout.json");
  if (fs::exists(dir / "ground_truth.csv")) {
    GroundTruthFile g = load_ground_truth_csv(dir / "ground_truth.csv", d.layout ? d.layout->scenario : "");
    if (static_cast<Index>(g.split.size()) != d.pair.size()) {
      throw DataError(dir.string() + ": ground_truth.csv and X.csv differ in row count");
    }
    d.pair.split = std::move(g.split);
    d.pair.truth = std::move(g.truth);
  }
  if (d.layout) {
    d.layout->x.check(d.pair.x.cols(), (dir / "layout.json").string() + " (x)");
    d.layout->y.check(d.pair.y.cols(), (dir / "layout.json").string() + " (y)");
  }
  d.pair.validate();
  return d;
}

}  // namespace macrobottle::dataio
