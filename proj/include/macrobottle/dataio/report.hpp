#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "macrobottle/anm.hpp"
#include "macrobottle/cae/pairs.hpp"
#include "macrobottle/cae/train.hpp"

// Run reports (schema version 1). Non-finite numbers are written as null
// and read back as NaN.
namespace macrobottle::dataio {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline double num_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline nlohmann::json nums(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

inline std::vector<double> nums_from(const nlohmann::json& j) {
  std::vector<double> v;
  for (const auto& e : j) v.push_back(num_from(e));
  return v;
}

}  // namespace detail

struct LossPoint {
  int epoch = 0;
  double train_total = 0.0;
  double validation_total = 0.0;
};

struct CellReport {
  double beta = 0.0;
  double gamma = 0.0;
  std::string status = "ok";  // "ok" or "failed"
  std::string error;
  // Metrics on the test split; NaN when undefined.
  Index informative_x = 0;
  Index informative_y = 0;
  double ev_y = 0.0;
  double ev_x = 0.0;
  double cross_ev_y = 0.0;
  double cross_ev_x = 0.0;
  std::vector<double> kl_x;
  std::vector<double> kl_y;
  int epochs_run = 0;
  int best_epoch = 0;
  bool early_stopped = false;
  std::vector<LossPoint> loss_curve;
  std::vector<cae::PairRow> pairs;
  std::string checkpoint;
  double seconds = 0.0;
};

struct HsicScore {
  double statistic = 0.0;
  double threshold = 0.0;
};

struct ScoreSet {
  HsicScore forward;
  HsicScore reverse;
  double ratio = 0.0;
  anm::Decision decision = anm::Decision::inconclusive;
};

struct VerdictReport {
  std::size_t pair_index = 0;
  Index neuron = 0;
  ScoreSet raw;
  ScoreSet transformed;
  std::string diagnostics;
  std::string scatter;  // CSV path, empty when not written
};

inline VerdictReport verdict_report(const anm::AnmVerdict& v, Index neuron) {
  auto scores = [](const anm::DirectionScores& s, anm::Decision d) {
    return ScoreSet{{s.forward.statistic, s.forward.threshold}, {s.reverse.statistic, s.reverse.threshold}, s.ratio, d};
  };
  return {v.pair_index, neuron, scores(v.raw, v.raw_decision), scores(v.transformed, v.decision), v.diagnostics, ""};
}

struct GridFiles {
  std::string side;  // "x" or "y"
  Index neuron = 0;
  Index k = 0;
  std::string high;
  std::string low;
};

struct InspectionReport {
  std::vector<double> kl_x;
  std::vector<double> kl_y;
  std::vector<Index> informative_x;
  std::vector<Index> informative_y;
  std::vector<cae::PairRow> pairs;
  std::vector<Index> unpaired_x;
  std::vector<Index> unpaired_y;
  std::vector<GridFiles> grids;
  std::string message;
};

struct RunReport {
  int schema_version = kReportSchemaVersion;
  std::string command;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;  // role -> path
  nlohmann::json config = nlohmann::json::object();
  double seconds = 0.0;
  std::vector<CellReport> cells;
  std::vector<VerdictReport> verdicts;
  std::optional<InspectionReport> inspection;
};

// ---- JSON ----------------------------------------------------------------

inline void to_json(nlohmann::json& j, const LossPoint& p) {
  j = {{"epoch", p.epoch}, {"train_total", detail::num(p.train_total)},
       {"validation_total", detail::num(p.validation_total)}};
}
inline void from_json(const nlohmann::json& j, LossPoint& p) {
  j.at("epoch").get_to(p.epoch);
  p.train_total = detail::num_from(j.at("train_total"));
  p.validation_total = detail::num_from(j.at("validation_total"));
}

}  // namespace macrobottle::dataio

namespace macrobottle::cae {

inline void to_json(nlohmann::json& j, const PairRow& r) {
  using dataio::detail::num;
  j = {{"neuron", r.neuron},         {"a_xy", num(r.a_xy)}, {"b_xy", num(r.b_xy)},
       {"a_yx", num(r.a_yx)},        {"b_yx", num(r.b_yx)}, {"cross_ev_y", num(r.cross_ev_y)},
       {"cross_ev_x", num(r.cross_ev_x)}};
}
inline void from_json(const nlohmann::json& j, PairRow& r) {
  using dataio::detail::num_from;
  j.at("neuron").get_to(r.neuron);
  r.a_xy = num_from(j.at("a_xy"));
  r.b_xy = num_from(j.at("b_xy"));
  r.a_yx = num_from(j.at("a_yx"));
  r.b_yx = num_from(j.at("b_yx"));
  r.cross_ev_y = num_from(j.at("cross_ev_y"));
  r.cross_ev_x = num_from(j.at("cross_ev_x"));
}

}  // namespace macrobottle::cae

namespace macrobottle::dataio {

inline void to_json(nlohmann::json& j, const CellReport& c) {
  using detail::num;
  j = {{"beta", c.beta},
       {"gamma", c.gamma},
       {"status", c.status},
       {"error", c.error},
       {"informative_x", c.informative_x},
       {"informative_y", c.informative_y},
       {"ev_y", num(c.ev_y)},
       {"ev_x", num(c.ev_x)},
       {"cross_ev_y", num(c.cross_ev_y)},
       {"cross_ev_x", num(c.cross_ev_x)},
       {"kl_x", detail::nums(c.kl_x)},
       {"kl_y", detail::nums(c.kl_y)},
       {"epochs_run", c.epochs_run},
       {"best_epoch", c.best_epoch},
       {"early_stopped", c.early_stopped},
       {"loss_curve", c.loss_curve},
       {"pairs", c.pairs},
       {"checkpoint", c.checkpoint},
       {"seconds", num(c.seconds)}};
}
inline void from_json(const nlohmann::json& j, CellReport& c) {
  using detail::num_from;
  j.at("beta").get_to(c.beta);
  j.at("gamma").get_to(c.gamma);
  j.at("status").get_to(c.status);
  j.at("error").get_to(c.error);
  j.at("informative_x").get_to(c.informative_x);
  j.at("informative_y").get_to(c.informative_y);
  c.ev_y = num_from(j.at("ev_y"));
  c.ev_x = num_from(j.at("ev_x"));
  c.cross_ev_y = num_from(j.at("cross_ev_y"));
  c.cross_ev_x = num_from(j.at("cross_ev_x"));
  c.kl_x = detail::nums_from(j.at("kl_x"));
  c.kl_y = detail::nums_from(j.at("kl_y"));
  j.at("epochs_run").get_to(c.epochs_run);
  j.at("best_epoch").get_to(c.best_epoch);
  j.at("early_stopped").get_to(c.early_stopped);
  j.at("loss_curve").get_to(c.loss_curve);
  j.at("pairs").get_to(c.pairs);
  j.at("checkpoint").get_to(c.checkpoint);
  c.seconds = num_from(j.at("seconds"));
}

inline void to_json(nlohmann::json& j, const HsicScore& s) {
  j = {{"statistic", detail::num(s.statistic)}, {"threshold", detail::num(s.threshold)}};
}
inline void from_json(const nlohmann::json& j, HsicScore& s) {
  s.statistic = detail::num_from(j.at("statistic"));
  s.threshold = detail::num_from(j.at("threshold"));
}

inline void to_json(nlohmann::json& j, const ScoreSet& s) {
  j = {{"forward", s.forward}, {"reverse", s.reverse}, {"ratio", detail::num(s.ratio)}, {"decision", s.decision}};
}
inline void from_json(const nlohmann::json& j, ScoreSet& s) {
  j.at("forward").get_to(s.forward);
  j.at("reverse").get_to(s.reverse);
  s.ratio = detail::num_from(j.at("ratio"));
  j.at("decision").get_to(s.decision);
}

inline void to_json(nlohmann::json& j, const VerdictReport& v) {
  j = {{"pair_index", v.pair_index}, {"neuron", v.neuron},           {"raw", v.raw},
       {"transformed", v.transformed}, {"diagnostics", v.diagnostics}, {"scatter", v.scatter}};
}
inline void from_json(const nlohmann::json& j, VerdictReport& v) {
  j.at("pair_index").get_to(v.pair_index);
  j.at("neuron").get_to(v.neuron);
  j.at("raw").get_to(v.raw);
  j.at("transformed").get_to(v.transformed);
  j.at("diagnostics").get_to(v.diagnostics);
  j.at("scatter").get_to(v.scatter);
}

inline void to_json(nlohmann::json& j, const GridFiles& g) {
  j = {{"side", g.side}, {"neuron", g.neuron}, {"k", g.k}, {"high", g.high}, {"low", g.low}};
}
inline void from_json(const nlohmann::json& j, GridFiles& g) {
  j.at("side").get_to(g.side);
  j.at("neuron").get_to(g.neuron);
  j.at("k").get_to(g.k);
  j.at("high").get_to(g.high);
  j.at("low").get_to(g.low);
}

inline void to_json(nlohmann::json& j, const InspectionReport& r) {
  j = {{"kl_x", detail::nums(r.kl_x)},
       {"kl_y", detail::nums(r.kl_y)},
       {"informative_x", r.informative_x},
       {"informative_y", r.informative_y},
       {"pairs", r.pairs},
       {"unpaired_x", r.unpaired_x},
       {"unpaired_y", r.unpaired_y},
       {"grids", r.grids},
       {"message", r.message}};
}
inline void from_json(const nlohmann::json& j, InspectionReport& r) {
  r.kl_x = detail::nums_from(j.at("kl_x"));
  r.kl_y = detail::nums_from(j.at("kl_y"));
  j.at("informative_x").get_to(r.informative_x);
  j.at("informative_y").get_to(r.informative_y);
  j.at("pairs").get_to(r.pairs);
  j.at("unpaired_x").get_to(r.unpaired_x);
  j.at("unpaired_y").get_to(r.unpaired_y);
  j.at("grids").get_to(r.grids);
  j.at("message").get_to(r.message);
}

inline void to_json(nlohmann::json& j, const RunReport& r) {
  j = {{"schema_version", r.schema_version},
       {"command", r.command},
       {"seed", r.seed},
       {"inputs", r.inputs},
       {"config", r.config},
       {"seconds", detail::num(r.seconds)},
       {"cells", r.cells},
       {"verdicts", r.verdicts}};
  j["inspection"] = r.inspection ? nlohmann::json(*r.inspection) : nlohmann::json(nullptr);
}
inline void from_json(const nlohmann::json& j, RunReport& r) {
  j.at("schema_version").get_to(r.schema_version);
  if (r.schema_version != kReportSchemaVersion) {
    throw DataError("run report: unsupported schema version " + std::to_string(r.schema_version));
  }
  j.at("command").get_to(r.command);
  j.at("seed").get_to(r.seed);
  j.at("inputs").get_to(r.inputs);
  r.config = j.at("config");
  r.seconds = detail::num_from(j.at("seconds"));
  j.at("cells").get_to(r.cells);
  j.at("verdicts").get_to(r.verdicts);
  if (const auto& i = j.at("inspection"); !i.is_null()) r.inspection = i.get<InspectionReport>();
}

inline void save_report(const std::filesystem::path& path, const RunReport& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << nlohmann::json(r).dump(2) << '\n';
  if (!out) throw DataError(path.string() + ": write failed");
}

inline RunReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open report");
  try {
    return nlohmann::json::parse(in).get<RunReport>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad report: " + e.what());
  }
}

// Cell metrics from a finished training run, evaluated on the test split.
inline CellReport cell_report(const cae::TrainResult& r, const DatasetPair& data, double seconds) {
  CellReport c;
  const auto& cfg = r.model.config;
  c.beta = cfg.beta;
  c.gamma = cfg.gamma;
  const Split eval_split = data.indices(Split::test).empty() ? Split::train : Split::test;
  const std::vector<Index> rows = data.indices(eval_split);
  const Matrix x = gather_rows(data.x, rows), y = gather_rows(data.y, rows);
  const cae::EvalMetrics m = cae::evaluate(r.model, x, y);
  c.informative_x = m.mask_x.count();
  c.informative_y = m.mask_y.count();
  c.ev_y = m.ev_y;
  c.ev_x = m.ev_x;
  c.cross_ev_y = m.cross_ev_y;
  c.cross_ev_x = m.cross_ev_x;
  c.kl_x = m.mask_x.kl;
  c.kl_y = m.mask_y.kl;
  c.epochs_run = static_cast<int>(r.history.epochs.size());
  c.best_epoch = r.history.best_epoch;
  c.early_stopped = r.history.early_stopped;
  for (const auto& e : r.history.epochs) c.loss_curve.push_back({e.epoch, e.train_total, e.validation.total});
  c.pairs = cae::pair_table(r.model, x, y, m.mask_x, m.mask_y).paired;
  c.seconds = seconds;
  return c;
}

}  // namespace macrobottle::dataio
