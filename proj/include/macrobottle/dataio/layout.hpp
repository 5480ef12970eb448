#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "macrobottle/errors.hpp"
#include "macrobottle/diffcore/matrix.hpp"

namespace macrobottle::dataio {

// Row-major placement of one side's columns on a rows x cols grid.
struct GridLayout {
  Index rows = 0;
  Index cols = 0;
  std::string channel;

  [[nodiscard]] Index size() const { return rows * cols; }

  void check(Index dim, const std::string& what) const {
    if (rows < 1 || cols < 1) throw DataError(what + ": layout must have positive rows and cols");
    if (size() != dim) {
      throw DataError(what + ": layout " + std::to_string(rows) + "x" + std::to_string(cols) + " does not match " +
                      std::to_string(dim) + " columns");
    }
  }
};

inline void to_json(nlohmann::json& j, const GridLayout& g) {
  j = {{"rows", g.rows}, {"cols", g.cols}, {"channel", g.channel}};
}
inline void from_json(const nlohmann::json& j, GridLayout& g) {
  j.at("rows").get_to(g.rows);
  j.at("cols").get_to(g.cols);
  g.channel = j.value("channel", "");
}

// The layout.json sidecar of a dataset directory.
struct PairLayout {
  GridLayout x;
  GridLayout y;
  std::string scenario;  // empty for user-supplied data
};

inline void to_json(nlohmann::json& j, const PairLayout& l) {
  j = {{"x", l.x}, {"y", l.y}};
  if (!l.scenario.empty()) j["scenario"] = l.scenario;
}
inline void from_json(const nlohmann::json& j, PairLayout& l) {
  j.at("x").get_to(l.x);
  j.at("y").get_to(l.y);
  l.scenario = j.value("scenario", "");
}

inline PairLayout load_layout(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open layout");
  try {
    return nlohmann::json::parse(in).get<PairLayout>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad layout: " + e.what());
  }
}

inline void save_layout(const std::filesystem::path& path, const PairLayout& l) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << nlohmann::json(l).dump(2) << '\n';
}

}  // namespace macrobottle::dataio
