// macrobottle: generate synthetic pairs, train Causal Autoencoder sweeps,
// infer causal direction between macrovariables, and inspect checkpoints.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data error,
// 4 numerical failure, 5 nothing to analyse (no informative pair).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "macrobottle/anm.hpp"
#include "macrobottle/cae.hpp"
#include "macrobottle/datagen.hpp"
#include "macrobottle/dataio.hpp"

namespace fs = std::filesystem;
namespace mb = macrobottle;
namespace io = macrobottle::dataio;
using mb::Index;
using mb::Matrix;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitNoPairs = 5;

// Thrown for bad flag values or config files; maps to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("MACROBOTTLE_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("MACROBOTTLE_SEED is not a non-negative integer: '") + env + "'");
  }
  return 0;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(path.string() + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

template <typename Config>
Config read_config(const std::string& path) {
  if (path.empty()) return Config{};
  try {
    return read_json_file(path).get<Config>();
  } catch (const std::invalid_argument& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

std::string fixed(double v, int digits = 3) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string compact(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- gen ---------------------------------------------------------------------

struct GenArgs {
  std::string scenario = "main";
  Index n = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verify = false;
  double structural_noise = mb::datagen::NoiseAmplitudes{}.structural;
  double pixel_noise = mb::datagen::NoiseAmplitudes{}.pixel;
};

int cmd_gen(const GenArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  mb::datagen::GeneratorOptions opt;
  opt.noise = {a.structural_noise, a.pixel_noise};
  const mb::DatasetPair p = a.scenario == "main" ? mb::datagen::gen_main_synthetic(a.n, seed, opt)
                                                 : mb::datagen::gen_asymmetric(a.n, seed, opt);
  const io::PairLayout layout{{mb::datagen::kImageSide, mb::datagen::kImageSide, "x-image"},
                              {mb::datagen::kImageSide, mb::datagen::kImageSide, "y-image"},
                              a.scenario};
  io::save_dataset_dir(a.out, p, layout);
  std::cout << "wrote " << a.n << " samples (" << a.scenario << ", seed " << seed << ") to " << a.out << "\n";

  if (a.verify) {
    const io::DatasetDir d = io::load_dataset_dir(a.out, seed);
    if (d.pair.x != p.x || d.pair.y != p.y) throw mb::DataError(a.out + ": re-read samples differ from generated");
    const double worst = mb::datagen::structural_violation(*d.pair.truth);
    std::cout << "verify: largest structural-equation violation " << worst << "\n";
    if (worst > 1e-12) throw mb::DataError(a.out + "/ground_truth.csv violates the structural equations");
    std::cout << "verify: ok\n";
  }
  return kExitOk;
}

// ---- train -------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string config;
  std::string sweep;
  std::string out;
  int parallel = 1;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
};

struct Cell {
  double beta;
  double gamma;
};

// "table" is the 3x3 grid over {1, 0.1, 0.01}; otherwise a JSON file with
// either {"beta": [...], "gamma": [...]} or {"cells": [{"beta":b, "gamma":g}, ...]}.
std::vector<Cell> parse_sweep(const std::string& spec, const mb::cae::CaeConfig& base) {
  std::vector<Cell> cells;
  if (spec.empty()) return {{base.beta, base.gamma}};
  auto grid = [&cells](const std::vector<double>& betas, const std::vector<double>& gammas) {
    for (double g : gammas)
      for (double b : betas) cells.push_back({b, g});
  };
  if (spec == "table") {
    grid({1, 0.1, 0.01}, {1, 0.1, 0.01});
  } else {
    const nlohmann::json j = read_json_file(spec);
    try {
      if (j.contains("cells")) {
        for (const auto& c : j.at("cells")) cells.push_back({c.at("beta").get<double>(), c.at("gamma").get<double>()});
      } else {
        grid(j.at("beta").get<std::vector<double>>(), j.at("gamma").get<std::vector<double>>());
      }
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(spec + ": " + e.what());
    }
  }
  if (cells.empty()) throw UsageError("sweep has no cells");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!(cells[i].beta >= 0) || !(cells[i].gamma >= 0)) throw UsageError("sweep: beta and gamma must be >= 0");
    for (std::size_t k = 0; k < i; ++k) {
      if (cells[k].beta == cells[i].beta && cells[k].gamma == cells[i].gamma) {
        throw UsageError("sweep: duplicate cell beta=" + compact(cells[i].beta) + " gamma=" + compact(cells[i].gamma));
      }
    }
  }
  return cells;
}

std::string cell_dir_name(const Cell& c) { return "cell_beta" + compact(c.beta) + "_gamma" + compact(c.gamma); }

io::CellReport run_cell(const mb::DatasetPair& data, mb::cae::CaeConfig cfg, const Cell& cell, const fs::path& dir) {
  cfg.beta = cell.beta;
  cfg.gamma = cell.gamma;
  const auto t0 = std::chrono::steady_clock::now();
  io::CellReport rep;
  try {
    const mb::cae::TrainResult r = mb::cae::train_cae(data, cfg);
    rep = io::cell_report(r, data, elapsed_since(t0));
    const fs::path stem = dir / "model";
    fs::create_directories(dir);
    mb::cae::save_model(r.model, stem);
    rep.checkpoint = stem.string();
  } catch (const mb::NumericalError& e) {
    rep = {};
    rep.beta = cell.beta;
    rep.gamma = cell.gamma;
    rep.status = "failed";
    rep.error = e.what();
    rep.ev_y = rep.ev_x = rep.cross_ev_y = rep.cross_ev_x = std::numeric_limits<double>::quiet_NaN();
    rep.seconds = elapsed_since(t0);
  }
  return rep;
}

void print_summary(std::ostream& os, const std::vector<io::CellReport>& cells) {
  std::vector<double> betas, gammas;
  for (const auto& c : cells) {
    if (std::find(betas.begin(), betas.end(), c.beta) == betas.end()) betas.push_back(c.beta);
    if (std::find(gammas.begin(), gammas.end(), c.gamma) == gammas.end()) gammas.push_back(c.gamma);
  }
  auto text = [&](double b, double g) -> std::string {
    for (const auto& c : cells) {
      if (c.beta != b || c.gamma != g) continue;
      if (c.status != "ok") return "failed";
      return std::to_string(c.informative_x) + "/" + std::to_string(c.informative_y) + " " + fixed(c.ev_y, 2) + "/" +
             fixed(c.ev_x, 2) + " " + fixed(c.cross_ev_y, 2) + "/" + fixed(c.cross_ev_x, 2);
    }
    return "-";
  };
  constexpr int kWidth = 26;
  os << "|Xb|/|Yb| EV(Y/X) EV(Yb/Xb) per cell; rows gamma, columns beta\n";
  os << std::left << std::setw(10) << "gamma";
  for (double b : betas) os << std::setw(kWidth) << ("beta=" + compact(b));
  os << "\n";
  for (double g : gammas) {
    os << std::setw(10) << compact(g);
    for (double b : betas) os << std::setw(kWidth) << text(b, g);
    os << "\n";
  }
  os << std::right;
}

void write_summary_csv(const fs::path& path, const std::vector<io::CellReport>& cells) {
  std::ofstream out(path);
  if (!out) throw mb::DataError(path.string() + ": cannot open for writing");
  out << "gamma,beta,status,informative_x,informative_y,ev_y,ev_x,cross_ev_y,cross_ev_x\n";
  for (const auto& c : cells) {
    auto num = [](double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); };
    out << io::format_double(c.gamma) << "," << io::format_double(c.beta) << "," << c.status << "," << c.informative_x
        << "," << c.informative_y << "," << num(c.ev_y) << "," << num(c.ev_x) << "," << num(c.cross_ev_y) << ","
        << num(c.cross_ev_x) << "\n";
  }
}

int cmd_train(const TrainArgs& a) {
  mb::cae::CaeConfig base = read_config<mb::cae::CaeConfig>(a.config);
  if (a.epochs) base.epochs = *a.epochs;
  if (a.seed || std::getenv("MACROBOTTLE_SEED") != nullptr || a.config.empty()) base.seed = resolve_seed(a.seed);
  try {
    base.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.parallel < 1) throw UsageError("--parallel must be >= 1");
  const std::vector<Cell> cells = parse_sweep(a.sweep, base);
  const io::DatasetDir d = io::load_dataset_dir(a.data, base.seed);
  const fs::path out = a.out;
  fs::create_directories(out);
  std::cout << "training " << cells.size() << " cell(s) on " << d.pair.size() << " samples, " << base.epochs
            << " epochs, seed " << base.seed << "\n";

  const auto t0 = std::chrono::steady_clock::now();
  std::vector<io::CellReport> reports(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex print;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const fs::path dir = out / cell_dir_name(cells[i]);
      reports[i] = run_cell(d.pair, base, cells[i], dir);
      io::RunReport r;
      r.command = "train";
      r.seed = base.seed;
      r.inputs = {{"data", a.data}};
      nlohmann::json cfg = base;
      cfg["beta"] = cells[i].beta;
      cfg["gamma"] = cells[i].gamma;
      r.config = cfg;
      r.seconds = reports[i].seconds;
      r.cells = {reports[i]};
      io::save_report(dir / "report.json", r);
      const std::lock_guard lock(print);
      const auto& c = reports[i];
      std::cout << "  beta=" << compact(c.beta) << " gamma=" << compact(c.gamma) << ": ";
      if (c.status == "ok") {
        std::cout << c.informative_x << "/" << c.informative_y << " informative, EV(Y/X) " << fixed(c.ev_y)
                  << ", EV(Yb/Xb) " << fixed(c.cross_ev_y) << " (" << fixed(c.seconds, 1) << " s)\n";
      } else {
        std::cout << "FAILED: " << c.error << "\n";
      }
    }
  };
  const int threads = std::min<int>(a.parallel, static_cast<int>(cells.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  io::RunReport summary;
  summary.command = "train";
  summary.seed = base.seed;
  summary.inputs = {{"data", a.data}};
  if (!a.config.empty()) summary.inputs["config"] = a.config;
  if (!a.sweep.empty()) summary.inputs["sweep"] = a.sweep;
  summary.config = base;
  summary.seconds = elapsed_since(t0);
  summary.cells = reports;
  io::save_report(out / "report.json", summary);
  write_summary_csv(out / "summary.csv", reports);
  print_summary(std::cout, reports);

  const auto failed = std::count_if(reports.begin(), reports.end(), [](const auto& c) { return c.status != "ok"; });
  if (failed > 0) std::cerr << failed << " of " << reports.size() << " cell(s) failed; see the per-cell reports\n";
  return failed == static_cast<long>(reports.size()) ? kExitNumerical : kExitOk;
}

// ---- direction -----------------------------------------------------------------

struct DirectionArgs {
  std::string checkpoint;
  std::string data;
  std::string pairs = "all";
  std::string out;
  std::string config;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
};

int cmd_direction(const DirectionArgs& a) {
  mb::anm::AnmConfig cfg = read_config<mb::anm::AnmConfig>(a.config);
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.seed || std::getenv("MACROBOTTLE_SEED") != nullptr || a.config.empty()) cfg.seed = resolve_seed(a.seed);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const mb::cae::CaeModel model = mb::cae::load_model(a.checkpoint);
  const io::DatasetDir d = io::load_dataset_dir(a.data, cfg.seed);
  const mb::cae::Macrovariables mv = mb::cae::extract_macrovariables(model, d.pair.x, d.pair.y);
  const std::size_t count = mv.neurons.size();
  if (count == 0) {
    std::cout << "no informative macrovariable pair: " << mv.warning << "\n";
    return kExitNoPairs;
  }
  std::vector<std::size_t> selected;
  if (a.pairs == "all") {
    for (std::size_t i = 0; i < count; ++i) selected.push_back(i);
  } else {
    std::size_t i = 0;
    try {
      std::size_t used = 0;
      i = std::stoul(a.pairs, &used);
      if (used != a.pairs.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw UsageError("--pairs must be 'all' or a pair index, got '" + a.pairs + "'");
    }
    if (i >= count) {
      throw UsageError("--pairs " + a.pairs + ": only " + std::to_string(count) + " pair(s) available");
    }
    selected.push_back(i);
  }

  const fs::path out = a.out;
  fs::create_directories(out);
  const auto t0 = std::chrono::steady_clock::now();
  io::RunReport report;
  report.command = "direction";
  report.seed = cfg.seed;
  report.inputs = {{"checkpoint", a.checkpoint}, {"data", a.data}};
  if (!a.config.empty()) report.inputs["config"] = a.config;
  report.config = cfg;
  std::cout << "pair  neuron  raw fwd/rev (thr)        transformed fwd/rev (thr)   ratio   verdict\n";
  for (std::size_t i : selected) {
    const Matrix cx = mv.x.col(static_cast<Index>(i));
    const Matrix cy = mv.y.col(static_cast<Index>(i));
    const mb::anm::AnmVerdict v = mb::anm::direction_verdict(
        std::span<const double>(cx.data(), static_cast<std::size_t>(cx.rows())),
        std::span<const double>(cy.data(), static_cast<std::size_t>(cy.rows())), cfg, i);
    io::VerdictReport vr = io::verdict_report(v, mv.neurons[i]);
    if (v.diagnostics.empty()) {
      const fs::path scatter = out / ("pair" + std::to_string(i) + "_scatter.csv");
      io::write_residual_scatter(scatter, v);
      vr.scatter = scatter.string();
    }
    report.verdicts.push_back(vr);
    std::cout << std::setw(4) << i << std::setw(8) << mv.neurons[i] << "  " << fixed(vr.raw.forward.statistic) << "/"
              << fixed(vr.raw.reverse.statistic) << " (" << fixed(vr.raw.forward.threshold) << ")        "
              << fixed(vr.transformed.forward.statistic) << "/" << fixed(vr.transformed.reverse.statistic) << " ("
              << fixed(vr.transformed.forward.threshold) << ")   " << fixed(vr.transformed.ratio, 2) << "   "
              << mb::anm::decision_name(v.decision) << "\n";
    if (!v.diagnostics.empty()) std::cout << "      fit failed: " << v.diagnostics << "\n";
  }
  report.seconds = elapsed_since(t0);
  io::save_report(out / "report.json", report);
  return kExitOk;
}

// ---- inspect -------------------------------------------------------------------

struct InspectArgs {
  std::string checkpoint;
  std::string data;
  std::string layout;
  std::string out;
  std::optional<Index> k;
  std::optional<std::uint64_t> seed;
};

int cmd_inspect(const InspectArgs& a) {
  const std::uint64_t seed = resolve_seed(a.seed);
  const mb::cae::CaeModel model = mb::cae::load_model(a.checkpoint);
  const io::DatasetDir d = io::load_dataset_dir(a.data, seed);
  io::PairLayout layout;
  if (!a.layout.empty()) {
    layout = io::load_layout(a.layout);
  } else if (d.layout) {
    layout = *d.layout;
  } else {
    throw mb::DataError("no layout: pass --layout or add layout.json to " + a.data);
  }
  layout.x.check(d.pair.x.cols(), "layout (x side)");
  layout.y.check(d.pair.y.cols(), "layout (y side)");
  const Index n = d.pair.size();
  const Index k = a.k.value_or(std::max<Index>(1, n / 50));
  if (k < 1 || k > n) throw UsageError("--k must lie in [1, " + std::to_string(n) + "]");

  const auto t0 = std::chrono::steady_clock::now();
  const mb::cae::EvalMetrics m = mb::cae::evaluate(model, d.pair.x, d.pair.y);
  const mb::cae::PairTable table = mb::cae::pair_table(model, d.pair.x, d.pair.y, m.mask_x, m.mask_y);
  io::InspectionReport ins;
  ins.kl_x = m.mask_x.kl;
  ins.kl_y = m.mask_y.kl;
  ins.informative_x = m.mask_x.indices();
  ins.informative_y = m.mask_y.indices();
  ins.pairs = table.paired;
  ins.unpaired_x = table.unpaired_x;
  ins.unpaired_y = table.unpaired_y;

  const fs::path out = a.out;
  fs::create_directories(out);
  for (const auto& [side, neurons] : {std::pair{io::Side::x, ins.informative_x}, std::pair{io::Side::y, ins.informative_y}}) {
    for (Index neuron : neurons) {
      const io::AnomalyGrid g = io::emit_anomaly_grid(model, d.pair, layout, side, neuron, k);
      const std::string base = std::string("anomaly_") + io::side_name(side) + "_neuron" + std::to_string(neuron);
      const fs::path high = out / (base + "_high.csv"), low = out / (base + "_low.csv");
      io::write_grid_csv(high, g.high);
      io::write_grid_csv(low, g.low);
      ins.grids.push_back({io::side_name(side), neuron, k, high.string(), low.string()});
    }
  }
  if (ins.informative_x.empty() && ins.informative_y.empty()) {
    ins.message = "no informative neurons (KL threshold " + compact(model.config.informative_threshold) + ")";
  } else if (ins.pairs.empty()) {
    ins.message = "no neuron is informative on both sides";
  }

  std::cout << "neuron  KL(x)      KL(y)\n";
  for (std::size_t i = 0; i < ins.kl_x.size(); ++i) {
    std::cout << std::setw(6) << i << "  " << std::setw(9) << fixed(ins.kl_x[i], 4) << (m.mask_x.informative[i] ? "*" : " ")
              << " " << std::setw(9) << fixed(ins.kl_y[i], 4) << (m.mask_y.informative[i] ? "*" : " ") << "\n";
  }
  std::cout << "(* informative) " << ins.pairs.size() << " pair(s), " << ins.grids.size()
            << " anomaly grid pair(s) written to " << a.out << "\n";
  if (!ins.message.empty()) std::cout << ins.message << "\n";

  io::RunReport report;
  report.command = "inspect";
  report.seed = seed;
  report.inputs = {{"checkpoint", a.checkpoint}, {"data", a.data}};
  if (!a.layout.empty()) report.inputs["layout"] = a.layout;
  report.config = {{"k", k}, {"informative_threshold", model.config.informative_threshold}};
  report.seconds = elapsed_since(t0);
  report.inspection = ins;
  io::save_report(out / "report.json", report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal macrovariable discovery with paired autoencoders"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic paired dataset");
  g->add_option("--scenario", gen.scenario, "main or asymmetric")->check(CLI::IsMember({"main", "asymmetric"}));
  g->add_option("--n", gen.n, "Number of samples")->required()->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Seed (default: MACROBOTTLE_SEED, else 0)");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_flag("--verify", gen.verify, "Re-read the files and check the structural equations");
  g->add_option("--structural-noise", gen.structural_noise, "Amplitude of the structural noise")->check(CLI::NonNegativeNumber);
  g->add_option("--pixel-noise", gen.pixel_noise, "Amplitude of the pixel noise")->check(CLI::NonNegativeNumber);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train one model per sweep cell");
  t->add_option("--data", train.data, "Dataset directory")->required();
  t->add_option("--config", train.config, "Model config (JSON)");
  t->add_option("--sweep", train.sweep, "'table' for the 3x3 beta/gamma grid, or a JSON sweep file");
  t->add_option("--out", train.out, "Output directory")->required();
  t->add_option("--parallel", train.parallel, "Cells trained concurrently");
  t->add_option("--epochs", train.epochs, "Override the configured epoch count");
  t->add_option("--seed", train.seed, "Seed (default: MACROBOTTLE_SEED, else the config's)");

  DirectionArgs dir;
  auto* d = app.add_subcommand("direction", "Infer the causal direction of each macrovariable pair");
  d->add_option("--checkpoint", dir.checkpoint, "Model checkpoint stem")->required();
  d->add_option("--data", dir.data, "Dataset directory")->required();
  d->add_option("--pairs", dir.pairs, "'all' or a pair index");
  d->add_option("--out", dir.out, "Output directory")->required();
  d->add_option("--config", dir.config, "Direction-inference config (JSON)");
  d->add_option("--epochs", dir.epochs, "Override the transform training epochs");
  d->add_option("--seed", dir.seed, "Seed (default: MACROBOTTLE_SEED, else the config's)");

  InspectArgs ins;
  auto* i = app.add_subcommand("inspect", "Per-neuron KL, pair table and anomaly grids of a checkpoint");
  i->add_option("--checkpoint", ins.checkpoint, "Model checkpoint stem")->required();
  i->add_option("--data", ins.data, "Dataset directory")->required();
  i->add_option("--layout", ins.layout, "Grid layout JSON (default: the dataset's layout.json)");
  i->add_option("--out", ins.out, "Output directory")->required();
  i->add_option("--k", ins.k, "Samples per composite (default n/50)");
  i->add_option("--seed", ins.seed, "Seed for split labels (default: MACROBOTTLE_SEED, else 0)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (t->parsed()) return cmd_train(train);
    if (d->parsed()) return cmd_direction(dir);
    if (i->parsed()) return cmd_inspect(ins);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mb::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const mb::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
