#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "macrobottle/cae/loss.hpp"
#include "macrobottle/metrics.hpp"

namespace macrobottle::cae {

// Noiseless evaluation of a model on one set of rows.
struct EvalMetrics {
  HalfLossValues x;  // net_x terms
  HalfLossValues y;  // net_y terms
  double total = 0.0;
  double ev_y = 0.0;        // Y predicted from X
  double ev_x = 0.0;        // X predicted from Y
  double cross_ev_y = 0.0;  // Y-bar predicted from X-bar, over informative Y-bar neurons
  double cross_ev_x = 0.0;  // X-bar predicted from Y-bar, over informative X-bar neurons
  metrics::InformativeMask mask_x;
  metrics::InformativeMask mask_y;
};

struct EpochRecord {
  int epoch = 0;
  HalfLossValues train_x;  // minibatch averages of the training terms
  HalfLossValues train_y;
  double train_total = 0.0;
  EvalMetrics validation;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  bool early_stopped = false;
};

struct TrainResult {
  CaeModel model;
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

namespace detail {

// EV that reports NaN instead of throwing when the truth is constant or empty.
inline double ev_or_nan(const Matrix& truth, const Matrix& pred) {
  if (truth.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  try {
    return metrics::explained_variance(truth, pred);
  } catch (const NumericalError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline Matrix select_cols(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = m.col(cols[j]);
  return out;
}

inline double sq_err(const Matrix& t, const Matrix& p, Reduction r) {
  const double denom = static_cast<double>(t.rows()) *
                       (r == Reduction::mean ? static_cast<double>(t.cols()) : 1.0);
  return (t - p).squaredNorm() / denom;
}

inline double kl_mean(const Encoding& e) {
  return metrics::gaussian_kl(e.mu, e.logvar).sum() / static_cast<double>(e.mu.rows());
}

}  // namespace detail

// `px` and `py` are already prepared (scaled) inputs. Deterministic: no
// sampling happens here.
inline EvalMetrics evaluate_prepared(const CaeModel& m, const Matrix& px, const Matrix& py) {
  if (px.rows() != py.rows()) throw DimensionError("evaluate: X and Y differ in rows");
  const Encoding ex = encode(m.net_x, px);
  const Encoding ey = encode(m.net_y, py);
  const Matrix y_hat = decode_additive(m.net_x, ex.mu);
  const Matrix x_hat = decode_additive(m.net_y, ey.mu);
  const Matrix ybar_hat = cross_predict(m.net_x, ex.mu);
  const Matrix xbar_hat = cross_predict(m.net_y, ey.mu);
  const Reduction r = m.config.reduction;

  EvalMetrics out;
  out.x = {detail::sq_err(py, y_hat, r), detail::kl_mean(ex), detail::sq_err(ey.mu, ybar_hat, r)};
  out.y = {detail::sq_err(px, x_hat, r), detail::kl_mean(ey), detail::sq_err(ex.mu, xbar_hat, r)};
  out.total = out.x.recon + m.config.beta * out.x.kl + m.config.gamma * out.x.cross +
              out.y.recon + m.config.beta * out.y.kl + m.config.gamma * out.y.cross;
  out.ev_y = detail::ev_or_nan(py, y_hat);
  out.ev_x = detail::ev_or_nan(px, x_hat);
  out.mask_x = metrics::informative_mask(metrics::per_neuron_kl(ex.mu, ex.logvar),
                                         m.config.informative_threshold);
  out.mask_y = metrics::informative_mask(metrics::per_neuron_kl(ey.mu, ey.logvar),
                                         m.config.informative_threshold);
  const auto iy = out.mask_y.indices();
  const auto ix = out.mask_x.indices();
  out.cross_ev_y = detail::ev_or_nan(detail::select_cols(ey.mu, iy), detail::select_cols(ybar_hat, iy));
  out.cross_ev_x = detail::ev_or_nan(detail::select_cols(ex.mu, ix), detail::select_cols(xbar_hat, ix));
  return out;
}

// Evaluates on raw (unscaled) rows.
inline EvalMetrics evaluate(const CaeModel& m, const Matrix& x, const Matrix& y) {
  return evaluate_prepared(m, m.prepare_x(x), m.prepare_y(y));
}

inline EvalMetrics evaluate(const CaeModel& m, const DatasetPair& pair, Split s) {
  const auto rows = pair.indices(s);
  if (rows.empty()) throw DataError(std::string("evaluate: split '") + split_name(s) + "' is empty");
  return evaluate(m, gather_rows(pair.x, rows), gather_rows(pair.y, rows));
}

// Minibatch Adam on the six-term loss. Validation metrics are computed on
// the validation split after every epoch (falling back to the training rows
// when the validation split is empty). With early stopping enabled the model
// with the lowest validation loss is returned and the history ends at the
// stopping epoch.
inline TrainResult train_cae(const DatasetPair& pair, const CaeConfig& cfg,
                             const EpochCallback& on_epoch = {}) {
  cfg.validate();
  pair.validate();
  const auto train_rows = pair.indices(Split::train);
  if (train_rows.empty()) throw DataError("train_cae: training split is empty");
  auto val_rows = pair.indices(Split::val);
  if (val_rows.empty()) val_rows = train_rows;

  TrainResult result{make_model(pair.x.cols(), pair.y.cols(), cfg), {}};
  CaeModel& m = result.model;
  if (cfg.standardize) {
    m.x_scaling = column_stats(pair.x, train_rows);
    m.y_scaling = column_stats(pair.y, train_rows);
  }
  const Matrix px = m.prepare_x(gather_rows(pair.x, train_rows));
  const Matrix py = m.prepare_y(gather_rows(pair.y, train_rows));
  const Matrix vx = m.prepare_x(gather_rows(pair.x, val_rows));
  const Matrix vy = m.prepare_y(gather_rows(pair.y, val_rows));

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Index> order(static_cast<std::size_t>(px.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  diff::Tape tape;

  double best_loss = std::numeric_limits<double>::infinity();
  std::optional<CaeModel> best;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate;
    const diff::AdamConstants adam{.weight_decay = cfg.weight_decay};
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    Index batches = 0;
    for (Index start = 0; start < px.rows(); start += cfg.batch_size) {
      const Index count = std::min(cfg.batch_size, px.rows() - start);
      const std::span<const Index> idx(order.data() + start, static_cast<std::size_t>(count));
      const Matrix bx = gather_rows(px, idx);
      const Matrix by = gather_rows(py, idx);

      auto run = [&](const CombinedOptions& opt, diff::ParamStore* only) {
        tape.clear();
        m.net_x.params.zero_grad();
        m.net_y.params.zero_grad();
        const CombinedLoss loss = combined_loss(tape, m, bx, by, rng, opt);
        const double total = loss.total.scalar();
        if (!std::isfinite(total)) {
          const HalfLossValues lx = values(loss.x), ly = values(loss.y);
          std::ostringstream msg;
          msg << "non-finite loss at epoch " << epoch << ", batch " << batches
              << ": x(recon=" << lx.recon << ", kl=" << lx.kl << ", cross=" << lx.cross
              << ") y(recon=" << ly.recon << ", kl=" << ly.kl << ", cross=" << ly.cross << ")";
          throw NumericalError(msg.str());
        }
        tape.backward(loss.total);
        if (only == nullptr || only == &m.net_x.params) diff::adam_step(m.net_x.params, lr, adam);
        if (only == nullptr || only == &m.net_y.params) diff::adam_step(m.net_y.params, lr, adam);
        return loss;
      };

      HalfLossValues lx, ly;
      if (cfg.training_mode == TrainingMode::combined) {
        const CombinedLoss loss = run({}, nullptr);
        lx = values(loss.x);
        ly = values(loss.y);
      } else {
        CombinedOptions ox;
        ox.detach_targets = true;
        ox.mask = {true, true, true, false, false, false};
        lx = values(run(ox, &m.net_x.params).x);
        CombinedOptions oy = ox;
        oy.mask = {false, false, false, true, true, true};
        ly = values(run(oy, &m.net_y.params).y);
      }
      for (auto [acc, v] : {std::pair{&rec.train_x, lx}, std::pair{&rec.train_y, ly}}) {
        acc->recon += v.recon;
        acc->kl += v.kl;
        acc->cross += v.cross;
      }
      ++batches;
    }
    for (HalfLossValues* acc : {&rec.train_x, &rec.train_y}) {
      acc->recon /= static_cast<double>(batches);
      acc->kl /= static_cast<double>(batches);
      acc->cross /= static_cast<double>(batches);
    }
    rec.train_total = rec.train_x.recon + cfg.beta * rec.train_x.kl + cfg.gamma * rec.train_x.cross +
                      rec.train_y.recon + cfg.beta * rec.train_y.kl + cfg.gamma * rec.train_y.cross;
    rec.validation = evaluate_prepared(m, vx, vy);
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (cfg.early_stop_patience > 0) {
      if (rec.validation.total < best_loss - cfg.early_stop_min_delta) {
        best_loss = rec.validation.total;
        best = m;
        result.history.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= cfg.early_stop_patience) {
        result.history.early_stopped = true;
        break;
      }
    }
  }
  if (best) {
    m = std::move(*best);
  } else {
    result.history.best_epoch = static_cast<int>(result.history.epochs.size());
  }
  return result;
}

// Noiseless bottleneck means restricted to neurons informative on both
// sides, so column j of `x` is cross-mapped to column j of `y`.
struct Macrovariables {
  Matrix x;
  Matrix y;
  std::vector<Index> neurons;  // bottleneck indices of the columns
  metrics::InformativeMask mask_x;
  metrics::InformativeMask mask_y;
  std::string warning;  // set when no neuron is informative on both sides
};

inline Macrovariables extract_macrovariables(const CaeModel& m, const Matrix& x, const Matrix& y) {
  const Encoding ex = encode(m.net_x, m.prepare_x(x));
  const Encoding ey = encode(m.net_y, m.prepare_y(y));
  Macrovariables out;
  out.mask_x = metrics::informative_mask(metrics::per_neuron_kl(ex.mu, ex.logvar),
                                         m.config.informative_threshold);
  out.mask_y = metrics::informative_mask(metrics::per_neuron_kl(ey.mu, ey.logvar),
                                         m.config.informative_threshold);
  for (Index i = 0; i < m.config.bottleneck_dim; ++i) {
    const auto s = static_cast<std::size_t>(i);
    if (out.mask_x.informative[s] && out.mask_y.informative[s]) out.neurons.push_back(i);
  }
  out.x = detail::select_cols(ex.mu, out.neurons);
  out.y = detail::select_cols(ey.mu, out.neurons);
  if (out.neurons.empty()) out.warning = "no bottleneck neuron is informative on both sides";
  return out;
}

}  // namespace macrobottle::cae
