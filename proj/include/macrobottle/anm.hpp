#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "macrobottle/diffcore.hpp"
#include "macrobottle/hsic.hpp"

namespace macrobottle::anm {

enum class Direction { x_to_y, y_to_x };
enum class Decision { x_to_y, y_to_x, no_direction, inconclusive };

NLOHMANN_JSON_SERIALIZE_ENUM(Direction, {{Direction::x_to_y, "x->y"}, {Direction::y_to_x, "y->x"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Decision, {{Decision::x_to_y, "x->y"},
                                        {Decision::y_to_x, "y->x"},
                                        {Decision::no_direction, "no-direction"},
                                        {Decision::inconclusive, "inconclusive"}})

inline const char* decision_name(Decision d) {
  switch (d) {
    case Decision::x_to_y: return "x->y";
    case Decision::y_to_x: return "y->x";
    case Decision::no_direction: return "no-direction";
    case Decision::inconclusive: return "inconclusive";
  }
  return "?";
}

struct AnmConfig {
  Index hidden = 16;
  int epochs = 150;
  // Large batches: the HSIC signal grows with batch size, its null noise does not.
  Index batch_size = 1000;
  double learning_rate = 1e-2;
  double beta = 0.01;  // KL weight of the 1-D autoencoders
  double alpha = 0.05;
  double disparity_min = 3.0;
  // Share of the pair used to fit the transforms. At 1 the scores are the
  // minimized dependence on the fitted points themselves; below 1 they are
  // measured on the held-out remainder.
  double fit_fraction = 1.0;
  // Cap on the number of held-out points entering each HSIC test (0: all).
  std::size_t max_test_points = 0;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("AnmConfig: " + m); };
    if (hidden < 1) fail("hidden must be >= 1");
    if (epochs < 0) fail("epochs must be >= 0");
    if (batch_size < 8) fail("batch_size must be >= 8");
    if (!(learning_rate > 0)) fail("learning_rate must be > 0");
    if (!(beta >= 0)) fail("beta must be >= 0");
    if (!(alpha > 0 && alpha < 1)) fail("alpha must lie in (0, 1)");
    if (!(disparity_min >= 1)) fail("disparity_min must be >= 1");
    if (!(fit_fraction > 0 && fit_fraction <= 1)) fail("fit_fraction must lie in (0, 1]");
  }
};

inline void to_json(nlohmann::json& j, const AnmConfig& c) {
  j = {{"hidden", c.hidden},         {"epochs", c.epochs},
       {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
       {"beta", c.beta},             {"alpha", c.alpha},
       {"disparity_min", c.disparity_min}, {"fit_fraction", c.fit_fraction},
       {"max_test_points", c.max_test_points}, {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, AnmConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("AnmConfig: expected a JSON object");
  static const std::set<std::string> known = {"hidden", "epochs", "batch_size", "learning_rate",
                                              "beta", "alpha", "disparity_min", "fit_fraction",
                                              "max_test_points", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("AnmConfig: unknown field '" + key + "'");
  }
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("hidden", c.hidden);
  get("epochs", c.epochs);
  get("batch_size", c.batch_size);
  get("learning_rate", c.learning_rate);
  get("beta", c.beta);
  get("alpha", c.alpha);
  get("disparity_min", c.disparity_min);
  get("fit_fraction", c.fit_fraction);
  get("max_test_points", c.max_test_points);
  get("seed", c.seed);
  c.validate();
}

// Two 1-D autoencoders (cause and effect side of one direction) and the
// affine map from the transformed cause to the transformed effect.
//
// Each side "c" or "e" owns:
//   <side>.s, <side>.mono.*  encoder mean  s*v + mono(v), s >= 0 and mono a
//                            tanh net with nonnegative weights, hence
//                            non-decreasing in v
//   <side>.lv.*              encoder log-variance (free net)
//   <side>.d, <side>.dec.*   decoder  d*z + dec(z)
// plus map.a, map.b.
struct TransformNetPair {
  Direction direction = Direction::x_to_y;
  diff::MlpSpec mono;
  diff::MlpSpec free_net;
  diff::ParamStore params;
};

inline TransformNetPair make_identity_transform(Direction dir, Index hidden, std::uint64_t seed) {
  TransformNetPair t;
  t.direction = dir;
  t.mono = {{1, hidden, 1}, diff::Activation::tanh, diff::WeightConstraint::nonnegative};
  t.free_net = {{1, hidden, 1}, diff::Activation::tanh, diff::WeightConstraint::free};
  Rng rng(seed);
  for (const std::string side : {"c", "e"}) {
    t.params.add(side + ".s", Matrix::Ones(1, 1), true);
    // Both sides start from the same monotone net, so y = x maps to a zero
    // residual. Unit centres tile [-2, 2] and the output weights start small
    // but positive: a zero start sits on the projection boundary and can stay
    // there for good.
    Rng mono_rng(seed ^ 0x5851f42d4c957f2dULL);
    diff::init_mlp(t.params, side + ".mono", t.mono, mono_rng);
    Matrix& w0 = t.params.value(diff::weight_name(side + ".mono", 0));
    Matrix& b0 = t.params.value(diff::bias_name(side + ".mono", 0));
    for (Index k = 0; k < hidden; ++k) {
      w0(0, k) = 1.0 + w0(0, k);
      const double centre = hidden > 1 ? -2.0 + 4.0 * static_cast<double>(k) / static_cast<double>(hidden - 1) : 0.0;
      b0(0, k) = -w0(0, k) * centre;
    }
    t.params.value(diff::weight_name(side + ".mono", 1)) *= 0.1;
    diff::init_mlp(t.params, side + ".lv", t.free_net, rng, {.zero_output_layer = true, .output_bias = -4.0});
    t.params.add(side + ".d", Matrix::Ones(1, 1));
    diff::init_mlp(t.params, side + ".dec", t.free_net, rng, {.zero_output_layer = true});
  }
  t.params.add("map.a", Matrix::Ones(1, 1));
  t.params.add("map.b", Matrix::Zero(1, 1));
  return t;
}

// Noiseless encoder mean of one side.
inline Matrix transform(const TransformNetPair& t, const std::string& side, const Matrix& v) {
  Matrix out = diff::mlp_eval(t.mono, t.params, side + ".mono", v);
  out += t.params.value(side + ".s")(0, 0) * v;
  return out;
}

// Decoder applied to the noiseless encoder mean.
inline Matrix reconstruct(const TransformNetPair& t, const std::string& side, const Matrix& v) {
  const Matrix z = transform(t, side, v);
  Matrix out = diff::mlp_eval(t.free_net, t.params, side + ".dec", z);
  out += t.params.value(side + ".d")(0, 0) * z;
  return out;
}

struct Residuals {
  Matrix cause;       // transformed cause (x' for x->y)
  Matrix effect;      // transformed effect
  Matrix prediction;  // a * cause + b
  Matrix residual;    // effect - prediction
};

// `x` and `y` are the pair in its original orientation.
inline Residuals residuals(const TransformNetPair& t, const Matrix& x, const Matrix& y) {
  const bool fwd = t.direction == Direction::x_to_y;
  Residuals r;
  r.cause = transform(t, "c", fwd ? x : y);
  r.effect = transform(t, "e", fwd ? y : x);
  r.prediction = (t.params.value("map.a")(0, 0) * r.cause).array() + t.params.value("map.b")(0, 0);
  r.residual = r.effect - r.prediction;
  return r;
}

namespace detail {

struct SideVars {
  diff::Var mu, recon, kl;
};

inline SideVars side_loss(diff::Tape& tape, TransformNetPair& t, const std::string& side, const diff::Var& v,
                          Rng& rng) {
  diff::Var mu = diff::add(diff::mlp_forward(tape, t.mono, t.params, side + ".mono", v),
                           diff::mul_row(v, tape.param(t.params, side + ".s")));
  diff::Var lv = diff::clamp(diff::mlp_forward(tape, t.free_net, t.params, side + ".lv", v), diff::kLogvarMin,
                             diff::kLogvarMax);
  diff::Var z = diff::gaussian_reparam(mu, lv, rng);
  diff::Var rec = diff::add(diff::mlp_forward(tape, t.free_net, t.params, side + ".dec", z),
                            diff::mul_row(z, tape.param(t.params, side + ".d")));
  // Inputs are standardized, so plain MSE is already variance-normalized.
  diff::Var recon = diff::mean(diff::square(diff::sub(rec, v)));
  diff::Var kl = diff::scale(
      diff::sum(diff::add_scalar(diff::sub(diff::add(diff::square(mu), diff::exp(lv)), lv), -1.0)),
      0.5 / static_cast<double>(v.rows()));
  return {mu, recon, kl};
}

}  // namespace detail

struct TransformLoss {
  diff::Var total, recon_c, kl_c, recon_e, kl_e, fit, hsic;
};

// recon_c + beta*kl_c + recon_e + beta*kl_e + MSE(e', a c' + b)/Var(e') + HSIC(c', res)
inline TransformLoss transform_loss(diff::Tape& tape, TransformNetPair& t, const Matrix& cause,
                                    const Matrix& effect, double beta, Rng& rng) {
  TransformLoss l;
  const auto c = detail::side_loss(tape, t, "c", tape.constant(cause), rng);
  const auto e = detail::side_loss(tape, t, "e", tape.constant(effect), rng);
  const diff::Var pred =
      diff::add_row(diff::mul_row(c.mu, tape.param(t.params, "map.a")), tape.param(t.params, "map.b"));
  const diff::Var res = diff::sub(e.mu, pred);
  const diff::Var var_e = diff::add_scalar(diff::mean(diff::square(diff::center_cols(e.mu))), 1e-12);
  l.fit = diff::div(diff::mean(diff::square(res)), var_e);
  l.hsic = hsic::hsic_loss(c.mu, res);
  l.recon_c = c.recon;
  l.kl_c = c.kl;
  l.recon_e = e.recon;
  l.kl_e = e.kl;
  l.total = diff::add(diff::add(diff::add(c.recon, diff::scale(c.kl, beta)),
                                diff::add(e.recon, diff::scale(e.kl, beta))),
                      diff::add(l.fit, l.hsic));
  return l;
}

// Minibatch Adam on the transform loss. `x` and `y` must be standardized
// n x 1 columns in the pair's original orientation.
inline TransformNetPair fit_transform(const Matrix& x, const Matrix& y, Direction dir, const AnmConfig& cfg) {
  cfg.validate();
  if (x.cols() != 1 || y.cols() != 1 || x.rows() != y.rows()) {
    throw DimensionError("fit_transform: expects two column vectors of equal length");
  }
  if (!all_finite(x) || !all_finite(y)) throw NumericalError("fit_transform: non-finite input");
  if (x.rows() < 8) throw DimensionError("fit_transform: need at least 8 samples");
  TransformNetPair t = make_identity_transform(dir, cfg.hidden, cfg.seed);
  const bool fwd = dir == Direction::x_to_y;
  const Matrix& cause = fwd ? x : y;
  const Matrix& effect = fwd ? y : x;
  Rng rng(cfg.seed ^ 0xd1b54a32d192ed03ULL);
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  diff::Tape tape;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Cosine decay: the per-batch HSIC gradient is noisy, and a constant step
    // leaves the transforms jittering around the optimum.
    const double lr = cfg.learning_rate * 0.5 *
                      (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch - 1) / cfg.epochs));
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < x.rows(); start += cfg.batch_size) {
      Index count = std::min(cfg.batch_size, x.rows() - start);
      if (count < 8) {
        if (start == 0) break;
        continue;  // drop a ragged tail too small for the HSIC term
      }
      const std::span<const Index> idx(order.data() + start, static_cast<std::size_t>(count));
      tape.clear();
      t.params.zero_grad();
      const TransformLoss l = transform_loss(tape, t, gather_rows(cause, idx), gather_rows(effect, idx), cfg.beta, rng);
      if (!std::isfinite(l.total.scalar())) {
        std::ostringstream msg;
        msg << "fit_transform: non-finite loss at epoch " << epoch << " (recon_c=" << l.recon_c.scalar()
            << ", kl_c=" << l.kl_c.scalar() << ", recon_e=" << l.recon_e.scalar() << ", kl_e=" << l.kl_e.scalar()
            << ", fit=" << l.fit.scalar() << ", hsic=" << l.hsic.scalar() << ")";
        throw NumericalError(msg.str());
      }
      tape.backward(l.total);
      diff::adam_step(t.params, lr);
    }
  }
  return t;
}

// Standardized copy (population statistics); throws on constant input.
inline Matrix standardized(std::span<const double> v, const char* what) {
  Matrix m(static_cast<Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Index>(i), 0) = v[i];
  if (!all_finite(m)) throw NumericalError(std::string(what) + ": non-finite value");
  const double mean = m.mean();
  const double sd = std::sqrt((m.array() - mean).square().mean());
  if (!(sd > 0)) throw NumericalError(std::string(what) + ": constant input");
  return ((m.array() - mean) / sd).matrix();
}

// Residual of the least-squares line through (cause, effect).
inline Residuals ols_residuals(const Matrix& cause, const Matrix& effect) {
  const double mc = cause.mean(), me = effect.mean();
  const double sxx = (cause.array() - mc).square().sum();
  const double slope = sxx > 0 ? ((cause.array() - mc) * (effect.array() - me)).sum() / sxx : 0.0;
  Residuals r;
  r.cause = cause;
  r.effect = effect;
  r.prediction = ((cause.array() - mc) * slope + me).matrix();
  r.residual = effect - r.prediction;
  return r;
}

struct DirectionScores {
  hsic::HsicResult forward;  // HSIC(x, y_res)
  hsic::HsicResult reverse;  // HSIC(y, x_res)
  double ratio = 0.0;        // max / min of the two statistics
};

// The decision rule, shared by the raw and transformed scores.
inline Decision decide(const DirectionScores& s, double disparity_min) {
  const bool fwd_ok = s.forward.statistic < s.forward.threshold;
  const bool rev_ok = s.reverse.statistic < s.reverse.threshold;
  const double f = s.forward.statistic, r = s.reverse.statistic;
  if (fwd_ok && !rev_ok && r >= disparity_min * f) return Decision::x_to_y;
  if (rev_ok && !fwd_ok && f >= disparity_min * r) return Decision::y_to_x;
  if (!fwd_ok && !rev_ok && s.ratio < disparity_min) return Decision::no_direction;
  return Decision::inconclusive;
}

struct AnmVerdict {
  std::size_t pair_index = 0;
  DirectionScores raw;
  DirectionScores transformed;
  Decision raw_decision = Decision::inconclusive;
  Decision decision = Decision::inconclusive;
  std::string diagnostics;
  // Points behind the scores, for scatter export.
  Residuals raw_xy, raw_yx, trans_xy, trans_yx;
};

namespace detail {

inline double ratio_of(double a, double b) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  if (lo > 0) return hi / lo;
  return hi > 0 ? std::numeric_limits<double>::infinity() : 1.0;
}

inline DirectionScores score(const Residuals& xy, const Residuals& yx, const hsic::HsicOptions& opt) {
  DirectionScores s;
  s.forward = hsic::hsic_statistic(xy.cause, xy.residual, opt);
  s.reverse = hsic::hsic_statistic(yx.cause, yx.residual, opt);
  s.ratio = ratio_of(s.forward.statistic, s.reverse.statistic);
  return s;
}

}  // namespace detail

// Standardizes the pair, fits a transform for each direction and tests
// residual independence on the scored points (all of them, or the held-out
// share when fit_fraction < 1). Raw scores use least-squares residuals of the
// same standardized points.
inline AnmVerdict direction_verdict(std::span<const double> x, std::span<const double> y, const AnmConfig& cfg,
                                    std::size_t pair_index = 0) {
  cfg.validate();
  if (x.size() != y.size()) throw DimensionError("direction_verdict: length mismatch");
  AnmVerdict v;
  v.pair_index = pair_index;
  const Matrix xs = standardized(x, "direction_verdict(x)");
  const Matrix ys = standardized(y, "direction_verdict(y)");
  const Index n = xs.rows();

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(cfg.seed ^ 0x94d049bb133111ebULL);
  std::shuffle(perm.begin(), perm.end(), rng);
  const bool holdout = cfg.fit_fraction < 1.0;
  const auto n_fit = holdout ? static_cast<Index>(std::floor(static_cast<double>(n) * cfg.fit_fraction)) : n;
  if (n_fit < 8 || (holdout && n - n_fit < 8)) {
    throw DimensionError("direction_verdict: need at least 8 points per part");
  }
  std::vector<Index> fit_rows(perm.begin(), perm.begin() + n_fit);
  std::vector<Index> test_rows = holdout ? std::vector<Index>(perm.begin() + n_fit, perm.end()) : fit_rows;
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  const Matrix fx = gather_rows(xs, fit_rows), fy = gather_rows(ys, fit_rows);
  const Matrix tx = gather_rows(xs, test_rows), ty = gather_rows(ys, test_rows);

  hsic::HsicOptions hopt;
  hopt.alpha = cfg.alpha;
  hopt.max_points = cfg.max_test_points;
  hopt.seed = cfg.seed;

  v.raw_xy = ols_residuals(tx, ty);
  v.raw_yx = ols_residuals(ty, tx);
  v.raw = detail::score(v.raw_xy, v.raw_yx, hopt);
  v.raw_decision = decide(v.raw, cfg.disparity_min);

  try {
    AnmConfig fwd_cfg = cfg, rev_cfg = cfg;
    fwd_cfg.seed = cfg.seed * 2 + 1;
    rev_cfg.seed = cfg.seed * 2 + 2;
    const TransformNetPair fwd = fit_transform(fx, fy, Direction::x_to_y, fwd_cfg);
    const TransformNetPair rev = fit_transform(fx, fy, Direction::y_to_x, rev_cfg);
    v.trans_xy = residuals(fwd, tx, ty);
    v.trans_yx = residuals(rev, tx, ty);
    v.transformed = detail::score(v.trans_xy, v.trans_yx, hopt);
    v.decision = decide(v.transformed, cfg.disparity_min);
  } catch (const Error& e) {
    v.decision = Decision::inconclusive;
    v.diagnostics = e.what();
  }
  return v;
}

}  // namespace macrobottle::anm
