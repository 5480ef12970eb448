#pragma once

#include "macrobottle/cae/model.hpp"

namespace macrobottle::cae {

struct HalfLossVars {
  diff::Var recon;
  diff::Var kl;
  diff::Var cross;
};

struct HalfLossValues {
  double recon = 0.0;
  double kl = 0.0;
  double cross = 0.0;
};

// Squared error reduced per `reduction`, always averaged over rows.
inline diff::Var squared_error(const diff::Var& target, const diff::Var& pred, Reduction r) {
  const diff::Var se = diff::sum(diff::square(diff::sub(pred, target)));
  const double denom = static_cast<double>(pred.rows()) *
                       (r == Reduction::mean ? static_cast<double>(pred.cols()) : 1.0);
  return diff::scale(se, 1.0 / denom);
}

// Mean over rows of the summed per-neuron KL to N(0, 1).
inline diff::Var kl_term(const diff::Var& mu, const diff::Var& logvar) {
  const diff::Var per_entry = diff::add_scalar(
      diff::sub(diff::add(diff::square(mu), diff::exp(logvar)), logvar), -1.0);
  return diff::scale(diff::sum(per_entry), 0.5 / static_cast<double>(mu.rows()));
}

// Three loss terms of one half. `other_mu` is the other half's noiseless
// bottleneck mean on the same rows; it is a live tape variable so that the
// cross term also trains the other encoder. When `noiseless` is set the
// decoder and cross-map consume mu instead of a sample.
inline HalfLossVars half_loss(diff::Tape& tape, CaeHalf& half, const EncodedVars& enc,
                              const diff::Var& other_mu, const diff::Var& target,
                              Reduction reduction, Rng& rng, bool noiseless = false) {
  if (target.rows() != enc.mu.rows() || other_mu.rows() != enc.mu.rows()) {
    throw DimensionError("half_loss: batches are not row-aligned");
  }
  const diff::Var z = noiseless ? enc.mu : diff::gaussian_reparam(enc.mu, enc.logvar, rng);
  return {squared_error(target, decode_additive(tape, half, z), reduction),
          kl_term(enc.mu, enc.logvar),
          squared_error(other_mu, cross_predict(tape, half, z), reduction)};
}

// Selects which of the six terms enter the total; used for masked gradient
// checks and by alternating training.
struct TermMask {
  bool x_recon = true, x_kl = true, x_cross = true;
  bool y_recon = true, y_kl = true, y_cross = true;
};

struct CombinedLoss {
  diff::Var total;
  HalfLossVars x;  // terms of net_x: predicts Y and net_y's bottleneck
  HalfLossVars y;  // terms of net_y: predicts X and net_x's bottleneck
};

struct CombinedOptions {
  TermMask mask;
  bool noiseless = false;
  // Treat the other half's bottleneck as a constant target (alternating mode).
  bool detach_targets = false;
};

// Six-term loss: recon + beta*kl + gamma*cross for each half. `bx` and `by`
// are row-aligned batches of (prepared) X and Y.
inline CombinedLoss combined_loss(diff::Tape& tape, CaeModel& m, const Matrix& bx, const Matrix& by,
                                  Rng& rng, const CombinedOptions& opt = {}) {
  if (bx.rows() != by.rows()) throw DimensionError("combined_loss: X and Y batches differ in rows");
  const diff::Var vx = tape.constant(bx);
  const diff::Var vy = tape.constant(by);
  const EncodedVars ex = encode(tape, m.net_x, vx);
  const EncodedVars ey = encode(tape, m.net_y, vy);
  const diff::Var tx = opt.detach_targets ? diff::detach(ey.mu) : ey.mu;
  const diff::Var ty = opt.detach_targets ? diff::detach(ex.mu) : ex.mu;
  const Reduction r = m.config.reduction;

  CombinedLoss out;
  out.x = half_loss(tape, m.net_x, ex, tx, vy, r, rng, opt.noiseless);
  out.y = half_loss(tape, m.net_y, ey, ty, vx, r, rng, opt.noiseless);

  const double beta = m.config.beta;
  const double gamma = m.config.gamma;
  const std::pair<bool, diff::Var> terms[] = {
      {opt.mask.x_recon, out.x.recon},
      {opt.mask.x_kl, diff::scale(out.x.kl, beta)},
      {opt.mask.x_cross, diff::scale(out.x.cross, gamma)},
      {opt.mask.y_recon, out.y.recon},
      {opt.mask.y_kl, diff::scale(out.y.kl, beta)},
      {opt.mask.y_cross, diff::scale(out.y.cross, gamma)},
  };
  for (const auto& [on, v] : terms) {
    if (!on) continue;
    out.total = out.total.valid() ? diff::add(out.total, v) : v;
  }
  if (!out.total.valid()) out.total = tape.constant(Matrix::Zero(1, 1));
  return out;
}

inline HalfLossValues values(const HalfLossVars& v) {
  return {v.recon.scalar(), v.kl.scalar(), v.cross.scalar()};
}

}  // namespace macrobottle::cae
