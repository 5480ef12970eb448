#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "macrobottle/diffcore/matrix.hpp"
#include "macrobottle/diffcore/reparam.hpp"

namespace macrobottle::metrics {

// 1 - SSE / SS_total, pooled over every entry, with SS_total taken around
// the per-column means of `truth`. Negative when `pred` is worse than
// predicting those means.
inline double explained_variance(const Matrix& truth, const Matrix& pred) {
  require_same_shape(truth, pred, "explained_variance");
  if (truth.size() == 0) throw DimensionError("explained_variance: empty input");
  const RowVector means = truth.colwise().mean();
  const double ss_total = (truth.rowwise() - means).squaredNorm();
  if (!(ss_total > 0.0)) throw NumericalError("explained_variance: truth has zero total variance");
  return 1.0 - (truth - pred).squaredNorm() / ss_total;
}

// Closed-form KL(N(mu, sigma^2) || N(0, 1)) per entry:
// (mu^2 + sigma^2 - 1 - log sigma^2) / 2, with logvar clamped as in sampling.
inline Matrix gaussian_kl(const Matrix& mu, const Matrix& logvar) {
  require_same_shape(mu, logvar, "gaussian_kl");
  const Matrix lv = logvar.cwiseMax(diff::kLogvarMin).cwiseMin(diff::kLogvarMax);
  return 0.5 * (mu.array().square() + lv.array().exp() - 1.0 - lv.array()).matrix();
}

// Mean over samples (rows) of the per-neuron KL.
inline std::vector<double> per_neuron_kl(const Matrix& mu, const Matrix& logvar) {
  const Matrix kl = gaussian_kl(mu, logvar);
  std::vector<double> out(static_cast<std::size_t>(kl.cols()), 0.0);
  if (kl.rows() == 0) return out;
  for (Index j = 0; j < kl.cols(); ++j) out[static_cast<std::size_t>(j)] = kl.col(j).mean();
  return out;
}

struct InformativeMask {
  std::vector<double> kl;
  std::vector<bool> informative;
  double threshold = 0.0;

  [[nodiscard]] Index count() const {
    return static_cast<Index>(std::count(informative.begin(), informative.end(), true));
  }
  [[nodiscard]] std::vector<Index> indices() const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < informative.size(); ++i) {
      if (informative[i]) out.push_back(static_cast<Index>(i));
    }
    return out;
  }
};

inline constexpr double kDefaultInformativeThreshold = 0.01;

// A neuron is informative when its mean KL exceeds `threshold` (nats).
inline InformativeMask informative_mask(const std::vector<double>& kl, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("informative_mask: threshold must be > 0");
  InformativeMask m{kl, {}, threshold};
  m.informative.reserve(kl.size());
  for (double v : kl) m.informative.push_back(v > threshold);
  return m;
}

}  // namespace macrobottle::metrics
