// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// if any criterion fails. Training-heavy: about three hours on one core.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "macrobottle/anm.hpp"
#include "macrobottle/cae.hpp"
#include "macrobottle/datagen.hpp"
#include "macrobottle/dataio.hpp"

namespace mb = macrobottle;
namespace cae = macrobottle::cae;
namespace anm = macrobottle::anm;
namespace hsic = macrobottle::hsic;
namespace io = macrobottle::dataio;
namespace fs = std::filesystem;
using mb::Index;
using mb::Matrix;
using nlohmann::json;

namespace {

// Pinned settings.
constexpr Index kSamples = 10000;
constexpr int kCaeEpochs = 1500;
constexpr int kTableSeeds = 3;
constexpr int kDirectionSeeds = 10;
constexpr int kAsymSeeds = 5;
constexpr int kAsymEpochs = 150;
constexpr double kAsymBeta = 0.01;
constexpr double kAsymGamma = 100.0;
const std::vector<double> kGrid{1.0, 0.1, 0.01};

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(prec);
  s << v;
  return s.str();
}

std::string count_of(int hits, int total) { return std::to_string(hits) + "/" + std::to_string(total); }

// Spearman rank correlation; ties cannot occur for continuous data.
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < order.size(); ++k) r[order[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double mid = (static_cast<double>(ra.size()) - 1.0) / 2.0;
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ab += (ra[i] - mid) * (rb[i] - mid);
    aa += (ra[i] - mid) * (ra[i] - mid);
    bb += (rb[i] - mid) * (rb[i] - mid);
  }
  return ab / std::sqrt(aa * bb);
}

class Acceptance {
 public:
  Acceptance(fs::path work, std::set<int> only) : work_(std::move(work)), only_(std::move(only)) {
    fs::create_directories(work_);
  }

  int run() {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, [this] { return variable_count(); }},   {2, [this] { return predictive_ev(); }},
        {3, [this] { return negative_ev(); }},      {4, [this] { return causal_pair(); }},
        {5, [this] { return confounded_pair(); }},  {6, [this] { return transform_needed(); }},
        {7, [this] { return coordination(); }},     {8, [this] { return properties(); }},
        {9, [this] { return grid_pipeline(); }}};
    std::vector<std::string> lines;
    bool all = true;
    for (const auto& [id, check] : criteria) {
      if (!only_.empty() && !only_.contains(id)) continue;
      const auto t0 = std::chrono::steady_clock::now();
      Outcome o;
      try {
        o = check();
      } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
      }
      const std::string line = "criterion " + std::to_string(id) + ": " + (o.pass ? "PASS" : "FAIL") + "  " +
                               o.detail + "  [" + fmt(seconds_since(t0), 0) + "s]";
      std::cout << line << std::endl;
      lines.push_back(line);
      log_["criteria"][std::to_string(id)] = {{"pass", o.pass}, {"detail", o.detail}};
      all = all && o.pass;
    }
    std::ofstream(work_ / "acceptance_log.json") << log_.dump(2) << "\n";
    std::cout << "\nsummary\n";
    for (const auto& l : lines) std::cout << "  " << l << "\n";
    return all ? 0 : 1;
  }

 private:
  fs::path work_;
  std::set<int> only_;
  json log_;
  std::map<std::uint64_t, mb::DatasetPair> main_data_;
  std::map<std::tuple<std::uint64_t, double, double>, cae::TrainResult> models_;
  std::map<std::uint64_t, std::vector<anm::AnmVerdict>> verdicts_;  // per seed: {x2y2, x1y1}

  void note(const std::string& s) {
    std::cout << "  " << s << std::endl;
    log_["notes"].push_back(s);
  }

  const mb::DatasetPair& main_data(std::uint64_t seed) {
    auto it = main_data_.find(seed);
    if (it == main_data_.end()) it = main_data_.emplace(seed, mb::datagen::gen_main_synthetic(kSamples, seed)).first;
    return it->second;
  }

  const cae::TrainResult& table_model(std::uint64_t seed, double beta, double gamma) {
    const auto key = std::make_tuple(seed, beta, gamma);
    auto it = models_.find(key);
    if (it != models_.end()) return it->second;
    cae::CaeConfig c;
    c.beta = beta;
    c.gamma = gamma;
    c.epochs = kCaeEpochs;
    c.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    cae::TrainResult r = cae::train_cae(main_data(seed), c);
    const cae::EvalMetrics e = cae::evaluate(r.model, main_data(seed), mb::Split::test);
    note("seed " + std::to_string(seed) + " beta=" + fmt(beta, 2) + " gamma=" + fmt(gamma, 2) + ": |X|=" +
         std::to_string(e.mask_x.count()) + " |Y|=" + std::to_string(e.mask_y.count()) + " EV(Y)=" + fmt(e.ev_y) +
         " EV(X)=" + fmt(e.ev_x) + " cross(Y)=" + fmt(e.cross_ev_y) + " cross(X)=" + fmt(e.cross_ev_x) + " (" +
         fmt(seconds_since(t0), 0) + "s)");
    return models_.emplace(key, std::move(r)).first->second;
  }

  cae::EvalMetrics table_eval(std::uint64_t seed, double beta, double gamma) {
    return cae::evaluate(table_model(seed, beta, gamma).model, main_data(seed), mb::Split::test);
  }

  Outcome variable_count() {
    int hits = 0, total = 0;
    std::string per_seed;
    for (int s = 0; s < kTableSeeds; ++s) {
      int seed_hits = 0;
      for (double beta : kGrid) {
        for (double gamma : kGrid) {
          const cae::EvalMetrics e = table_eval(static_cast<std::uint64_t>(s), beta, gamma);
          const bool ok = e.mask_x.count() == 2 && e.mask_y.count() == 2;
          seed_hits += ok ? 1 : 0;
          ++total;
        }
      }
      hits += seed_hits;
      per_seed += (per_seed.empty() ? "" : ", ") + ("seed " + std::to_string(s) + " " + count_of(seed_hits, 9));
    }
    const int need = 8 * kTableSeeds;
    return {hits >= need, "|X|=|Y|=2 in " + count_of(hits, total) + " cells (need " + std::to_string(need) + "; " +
                              per_seed + "; " + std::to_string(kCaeEpochs) + " epochs)"};
  }

  Outcome predictive_ev() {
    int hits = 0;
    std::string detail;
    for (int s = 0; s < kTableSeeds; ++s) {
      const cae::EvalMetrics e = table_eval(static_cast<std::uint64_t>(s), 0.01, 1.0);
      const bool ok = e.ev_y >= 0.75 && e.ev_x >= 0.70 && e.cross_ev_y >= 0.85 && e.cross_ev_x >= 0.85;
      hits += ok ? 1 : 0;
      detail += " [" + fmt(e.ev_y, 2) + "/" + fmt(e.ev_x, 2) + " " + fmt(e.cross_ev_y, 2) + "/" + fmt(e.cross_ev_x, 2) +
                "]";
    }
    const int need = kTableSeeds / 2 + 1;
    return {hits >= need, "beta=0.01 gamma=1 meets EV(Y)>=.75 EV(X)>=.70 cross>=.85 in " + count_of(hits, kTableSeeds) +
                              " seeds (need " + std::to_string(need) + "):" + detail};
  }

  Outcome negative_ev() {
    int hits = 0;
    std::string detail;
    for (int s = 0; s < kTableSeeds; ++s) {
      const cae::EvalMetrics e = table_eval(static_cast<std::uint64_t>(s), 1.0, 0.01);
      const bool ok = e.cross_ev_y < 0.0 || e.cross_ev_x < 0.0;
      hits += ok ? 1 : 0;
      detail += " [" + fmt(e.cross_ev_y) + "/" + fmt(e.cross_ev_x) + "]";
    }
    const int need = kTableSeeds / 2 + 1;
    return {hits >= need, "beta=1 gamma=0.01 has a negative cross-EV in " + count_of(hits, kTableSeeds) +
                              " seeds (need " + std::to_string(need) + "):" + detail};
  }

  // Verdicts for the extracted pairs tracking (x2, y2) and (x1, y1); empty
  // when the trained model has no column pair tracking them.
  const std::vector<anm::AnmVerdict>& direction_run(std::uint64_t seed) {
    auto it = verdicts_.find(seed);
    if (it != verdicts_.end()) return it->second;
    std::vector<anm::AnmVerdict> out;
    const mb::DatasetPair& d = main_data(seed);
    const cae::Macrovariables mv = cae::extract_macrovariables(table_model(seed, 0.01, 1.0).model, d.x, d.y);
    // Column whose x side tracks `tx` and y side tracks `ty` best.
    auto match = [&](const std::vector<double>& tx, const std::vector<double>& ty, Index& col) {
      double best = 0.0;
      for (Index j = 0; j < mv.x.cols(); ++j) {
        const double r = std::min(std::abs(spearman(mb::column_vector(mv.x, j), tx)),
                                  std::abs(spearman(mb::column_vector(mv.y, j), ty)));
        if (r > best) {
          best = r;
          col = j;
        }
      }
      return best;
    };
    Index c2 = -1, c1 = -1;
    const double r2 = match(d.truth->x2, d.truth->y2, c2);
    const double r1 = match(d.truth->x1, d.truth->y1, c1);
    std::string why;
    if (r2 < 0.9 || r1 < 0.9 || c1 == c2) {
      why = "no clean column pairs (rank correlations " + fmt(r2) + ", " + fmt(r1) + ")";
    } else {
      anm::AnmConfig cfg;
      cfg.seed = seed;
      for (Index c : {c2, c1}) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto x = mb::column_vector(mv.x, c), y = mb::column_vector(mv.y, c);
        out.push_back(anm::direction_verdict(x, y, cfg, static_cast<std::size_t>(c)));
        const anm::AnmVerdict& v = out.back();
        note("seed " + std::to_string(seed) + (c == c2 ? " (x2,y2)" : " (x1,y1)") + " raw " +
             fmt(v.raw.forward.statistic) + "/" + fmt(v.raw.reverse.statistic) + " thr " +
             fmt(v.raw.forward.threshold) + "/" + fmt(v.raw.reverse.threshold) + " -> transformed " +
             fmt(v.transformed.forward.statistic) + "/" + fmt(v.transformed.reverse.statistic) + " thr " +
             fmt(v.transformed.forward.threshold) + "/" + fmt(v.transformed.reverse.threshold) + " ratio " +
             fmt(v.transformed.ratio, 2) + " " + anm::decision_name(v.decision) +
             (v.diagnostics.empty() ? "" : " (" + v.diagnostics + ")") + " (" + fmt(seconds_since(t0), 0) + "s)");
      }
    }
    if (!why.empty()) note("seed " + std::to_string(seed) + ": " + why);
    return verdicts_.emplace(seed, std::move(out)).first->second;
  }

  Outcome count_verdicts(const std::string& what, const std::function<bool(const std::vector<anm::AnmVerdict>&)>& ok) {
    int hits = 0;
    for (int s = 0; s < kDirectionSeeds; ++s) {
      const auto& v = direction_run(static_cast<std::uint64_t>(s));
      if (!v.empty() && ok(v)) ++hits;
    }
    return {hits >= 8, what + " in " + count_of(hits, kDirectionSeeds) + " seeds (need 8)"};
  }

  static bool above(const hsic::HsicResult& r) { return r.statistic >= r.threshold; }

  Outcome causal_pair() {
    return count_verdicts("(x2,y2) forward below threshold, reverse above, ratio>=3, verdict x->y",
                          [](const auto& v) { return v[0].decision == anm::Decision::x_to_y; });
  }

  Outcome confounded_pair() {
    return count_verdicts("(x1,y1) both transformed HSICs above threshold, verdict no-direction", [](const auto& v) {
      return above(v[1].transformed.forward) && above(v[1].transformed.reverse) &&
             v[1].decision == anm::Decision::no_direction;
    });
  }

  Outcome transform_needed() {
    return count_verdicts("(x2,y2) raw HSICs both above threshold and transformed verdict x->y", [](const auto& v) {
      return above(v[0].raw.forward) && above(v[0].raw.reverse) && v[0].decision == anm::Decision::x_to_y;
    });
  }

  Outcome coordination() {
    int hits = 0;
    std::string detail;
    for (int s = 0; s < kAsymSeeds; ++s) {
      const auto seed = static_cast<std::uint64_t>(s);
      const mb::DatasetPair d = mb::datagen::gen_asymmetric(kSamples, seed);
      double cross[2];
      for (int mode = 0; mode < 2; ++mode) {
        cae::CaeConfig c;
        c.beta = kAsymBeta;
        c.gamma = kAsymGamma;
        c.epochs = kAsymEpochs;
        c.weight_decay = 0.0;
        c.seed = seed;
        c.training_mode = mode == 0 ? cae::TrainingMode::combined : cae::TrainingMode::alternating;
        double value = std::numeric_limits<double>::quiet_NaN();
        try {
          value = cae::evaluate(cae::train_cae(d, c).model, d, mb::Split::test).cross_ev_x;
        } catch (const mb::NumericalError& e) {
          note("seed " + std::to_string(s) + (mode == 0 ? " combined" : " alternating") + ": " + e.what());
        }
        cross[mode] = value;
      }
      // NaN (no informative X-bar neuron, or a diverged run) does not exceed 0.
      const bool ok = cross[0] > 0.5 && !(cross[1] > 0.0);
      hits += ok ? 1 : 0;
      note("seed " + std::to_string(s) + " asymmetric cross-EV(X-bar) combined=" + fmt(cross[0]) +
           " alternating=" + fmt(cross[1]));
      detail += " [" + fmt(cross[0], 2) + "/" + fmt(cross[1], 2) + "]";
    }
    return {hits >= 4, "combined > 0.5 and alternating <= 0 in " + count_of(hits, kAsymSeeds) + " seeds (need 4; beta=" +
                           fmt(kAsymBeta, 2) + " gamma=" + fmt(kAsymGamma, 0) + ", " + std::to_string(kAsymEpochs) +
                           " epochs):" + detail};
  }

  // Deterministic property checks live in the unit-test binaries; run the
  // relevant cases by name.
  Outcome properties() {
    struct Group {
      const char* what;
      const char* binary;
      const char* filter;
    };
    const std::vector<Group> groups{
        {"gradients", MACROBOTTLE_DIFFCORE_TEST,
         "Backward.MatchesCentralFiniteDifferences:Ops.GradientsMatchFiniteDifferences:Reparam.*"},
        {"gradients", MACROBOTTLE_CAE_TEST, "CaeLoss.GradientsMatchFiniteDifferences:CaeLoss.CrossTermTrainsTheOtherEncoder"},
        {"gradients", MACROBOTTLE_HSIC_TEST, "HsicLoss.GradientMatchesFiniteDifferences"},
        {"hsic oracle", MACROBOTTLE_HSIC_TEST, "HsicStatistic.MatchesDenseOracle"},
        {"kl", MACROBOTTLE_METRICS_TEST, "PerNeuronKl.*"},
        {"ev", MACROBOTTLE_METRICS_TEST, "ExplainedVariance.*"},
        {"decoder additivity", MACROBOTTLE_CAE_TEST, "CaeDecode.*"},
        {"cross-map jacobian", MACROBOTTLE_CAE_TEST, "CaeCross.*"},
        {"monotone encoder", MACROBOTTLE_ANM_TEST, "Transform.EncoderMeanIsMonotoneOnAProbeGrid"},
        {"round trips", MACROBOTTLE_DATAIO_TEST, "Csv.*:DatasetDir.*:RunReport.*"},
        {"round trips", MACROBOTTLE_DIFFCORE_TEST, "Checkpoint.*"},
    };
    std::set<std::string> failed;
    const fs::path log = work_ / "properties.log";
    fs::remove(log);
    for (const Group& g : groups) {
      const std::string cmd = std::string("'") + g.binary + "' --gtest_filter='" + g.filter + "' >> '" +
                              log.string() + "' 2>&1";
      const int status = std::system(cmd.c_str());
      if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) failed.insert(g.what);
    }
    if (failed.empty()) return {true, "gradients, HSIC oracle, KL, EV, additivity, cross-map, monotonicity, round trips"};
    std::string list;
    for (const auto& f : failed) list += (list.empty() ? "" : ", ") + f;
    return {false, "failing groups: " + list + " (see " + (work_ / "properties.log").string() + ")"};
  }

  // A synthetic 9x55 paired grid dataset in the documented directory format,
  // pushed through `train` and `inspect`.
  Outcome grid_pipeline() {
    const fs::path root = work_ / "grid";
    fs::remove_all(root);
    constexpr Index rows = 9, cols = 55, n = 800;
    mb::Rng rng(2024);
    std::normal_distribution<double> g(0.0, 1.0);
    // Two smooth spatial modes per side, driven by shared latent amplitudes.
    auto mode = [](Index r, Index c, double cr, double cc, double w) {
      const double dr = (static_cast<double>(r) - cr) / 3.0, dc = (static_cast<double>(c) - cc) / w;
      return std::exp(-0.5 * (dr * dr + dc * dc));
    };
    mb::DatasetPair p;
    p.x.resize(n, rows * cols);
    p.y.resize(n, rows * cols);
    for (Index i = 0; i < n; ++i) {
      const double a = g(rng), b = g(rng);
      const double ya = std::tanh(a) + 0.3 * g(rng), yb = 0.8 * b + 0.3 * g(rng);
      for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
          const Index k = r * cols + c;
          p.x(i, k) = a * mode(r, c, 4, 15, 8) + b * mode(r, c, 4, 40, 8) + 0.2 * g(rng);
          p.y(i, k) = ya * mode(r, c, 2, 20, 10) + yb * mode(r, c, 6, 45, 6) + 0.2 * g(rng);
        }
      }
    }
    p.split = mb::make_split(n, 7);
    io::save_dataset_dir(root / "data", p, {{rows, cols, "sst"}, {rows, cols, "precip"}, ""});

    const fs::path cfg = root / "train.json";
    std::ofstream(cfg) << R"({"epochs": 60, "beta": 0.01, "gamma": 1})";
    auto cli = [&](const std::string& args) {
      const std::string cmd =
          std::string("'") + MACROBOTTLE_CLI + "' " + args + " >> '" + (root / "cli.log").string() + "' 2>&1";
      const int status = std::system(cmd.c_str());
      return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    };
    const std::string data = (root / "data").string();
    if (int c = cli("train --data " + data + " --config " + cfg.string() + " --seed 1 --out " + (root / "train").string());
        c != 0) {
      return {false, "train exited with " + std::to_string(c)};
    }
    const fs::path cell = root / "train" / "cell_beta0.01_gamma1";
    if (int c = cli("inspect --checkpoint " + (cell / "model").string() + " --data " + data + " --out " +
                    (root / "inspect").string());
        c != 0) {
      return {false, "inspect exited with " + std::to_string(c)};
    }

    const auto validator =
        io::SchemaValidator::from_file(fs::path(MACROBOTTLE_SOURCE_DIR) / "schema" / "run_report.schema.json");
    std::vector<std::string> problems;
    for (const fs::path& report : {root / "train" / "report.json", cell / "report.json", root / "inspect" / "report.json"}) {
      std::ifstream in(report);
      if (!in) {
        problems.push_back(report.string() + " missing");
        continue;
      }
      for (const auto& e : validator.validate(json::parse(in))) problems.push_back(report.filename().string() + ": " + e);
    }
    const io::RunReport r = io::load_report(root / "inspect" / "report.json");
    std::size_t grids = 0;
    if (!r.inspection) {
      problems.push_back("inspect report lacks the inspection block");
    } else {
      const std::size_t expected = r.inspection->informative_x.size() + r.inspection->informative_y.size();
      if (expected == 0) problems.push_back("no informative neurons after training");
      if (r.inspection->grids.size() != expected) problems.push_back("grid count differs from informative neurons");
      for (const auto& gf : r.inspection->grids) {
        for (const std::string& f : {gf.high, gf.low}) {
          const io::CsvTable t = io::read_csv(f);
          if (t.values.rows() != rows || t.values.cols() != cols) problems.push_back(f + " is not 9x55");
          ++grids;
        }
      }
      if (r.inspection->grids.empty() || r.inspection->grids.front().k != n / 50) problems.push_back("k differs from n/50");
    }
    if (!problems.empty()) return {false, problems.front() + " (" + std::to_string(problems.size()) + " problem(s))"};
    return {true, "train + inspect on a 9x55 grid pair: 3 schema-valid reports, " + std::to_string(grids) +
                      " anomaly grids of 9x55"};
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"macrobottle acceptance run"};
  std::string work = (fs::temp_directory_path() / "macrobottle_acceptance").string();
  std::vector<int> only;
  app.add_option("--work", work, "Scratch directory for generated files");
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  try {
    return Acceptance(work, {only.begin(), only.end()}).run();
  } catch (const std::exception& e) {
    std::cerr << "acceptance: " << e.what() << "\n";
    return 2;
  }
}
