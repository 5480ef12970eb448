#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/gamma.hpp>

#include "macrobottle/diffcore.hpp"

namespace macrobottle::hsic {

struct HsicOptions {
  double alpha = 0.05;
  // Points used for the bandwidth median (a seeded subsample above this).
  std::size_t bandwidth_points = 1000;
  // Test on a seeded subsample of at most this many pairs (0: all).
  std::size_t max_points = 0;
  std::uint64_t seed = 0;
};

struct HsicResult {
  double statistic = 0.0;  // n * HSIC_b
  double threshold = 0.0;  // level-alpha critical value of the gamma null
  double bandwidth_x = 0.0;
  double bandwidth_y = 0.0;
  std::size_t n = 0;

  [[nodiscard]] bool rejects_independence() const { return statistic >= threshold; }
};

namespace detail {

inline std::vector<std::size_t> seeded_subset(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (k == 0 || k >= n) return idx;
  Rng rng(seed ^ 0x2545f4914f6cdd1dULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline double gauss(double d, double h) { return std::exp(-d * d / (2.0 * h * h)); }

}  // namespace detail

// Median of |x_i - x_j| over pairs i < j, taken on a seeded subsample of at
// most `max_points` values. Even pair counts average the two middle values.
inline double median_bandwidth(std::span<const double> x, std::size_t max_points = 1000,
                               std::uint64_t seed = 0) {
  if (x.size() < 2) throw NumericalError("median_bandwidth: need at least two values");
  const auto idx = detail::seeded_subset(x.size(), max_points, seed);
  std::vector<double> d;
  d.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) d.push_back(std::abs(x[idx[a]] - x[idx[b]]));
  }
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double med = d[mid];
  if (d.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  if (!(med > 0.0) || !std::isfinite(med)) {
    throw NumericalError("median_bandwidth: degenerate bandwidth (input is (nearly) constant)");
  }
  return med;
}

// Statistic and gamma-approximation threshold with Gaussian kernels
// exp(-d^2 / (2 h^2)). Memory is O(n): kernel rows are recomputed instead of
// storing the Gram matrices.
inline HsicResult hsic_statistic(std::span<const double> x_all, std::span<const double> y_all,
                                 const HsicOptions& opt = {}) {
  if (x_all.size() != y_all.size()) throw DimensionError("hsic_statistic: length mismatch");
  if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw std::invalid_argument("hsic_statistic: alpha must lie in (0, 1)");
  const auto idx = detail::seeded_subset(x_all.size(), opt.max_points, opt.seed);
  const std::size_t n = idx.size();
  if (n < 6) throw DimensionError("hsic_statistic: need at least 6 samples");
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = x_all[idx[i]];
    y[i] = y_all[idx[i]];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw NumericalError("hsic_statistic: non-finite input");
  }
  HsicResult r;
  r.n = n;
  r.bandwidth_x = median_bandwidth(x, opt.bandwidth_points, opt.seed);
  r.bandwidth_y = median_bandwidth(y, opt.bandwidth_points, opt.seed + 1);
  const double hx = r.bandwidth_x, hy = r.bandwidth_y;
  const double nd = static_cast<double>(n);

  // Pass 1: row sums of K and L (diagonal entries are 1).
  std::vector<double> rk(n, 0.0), rl(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double k = detail::gauss(x[i] - x[j], hx);
      const double l = detail::gauss(y[i] - y[j], hy);
      rk[i] += k;
      rk[j] += k;
      rl[i] += l;
      rl[j] += l;
    }
  }
  const double off_k = std::accumulate(rk.begin(), rk.end(), 0.0);
  const double off_l = std::accumulate(rl.begin(), rl.end(), 0.0);
  const double mean_k = (off_k + nd) / (nd * nd);
  const double mean_l = (off_l + nd) / (nd * nd);
  std::vector<double> ck(n), cl(n);  // row means including the diagonal
  for (std::size_t i = 0; i < n; ++i) {
    ck[i] = (rk[i] + 1.0) / nd;
    cl[i] = (rl[i] + 1.0) / nd;
  }

  // Pass 2: sum of centred products, and of their squares off the diagonal.
  double trace = 0.0, sq_off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double kd = 1.0 - 2.0 * ck[i] + mean_k;
    const double ld = 1.0 - 2.0 * cl[i] + mean_l;
    trace += kd * ld;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double kt = detail::gauss(x[i] - x[j], hx) - ck[i] - ck[j] + mean_k;
      const double lt = detail::gauss(y[i] - y[j], hy) - cl[i] - cl[j] + mean_l;
      const double p = kt * lt;
      trace += 2.0 * p;
      sq_off += 2.0 * (p / 6.0) * (p / 6.0);
    }
  }
  r.statistic = std::max(0.0, trace / nd);

  const double mu_x = off_k / (nd * (nd - 1.0));
  const double mu_y = off_l / (nd * (nd - 1.0));
  const double mean_null = (1.0 + mu_x * mu_y - mu_x - mu_y) / nd;
  const double var_null = 72.0 * (nd - 4.0) * (nd - 5.0) / (nd * (nd - 1.0) * (nd - 2.0) * (nd - 3.0)) *
                          sq_off / (nd * (nd - 1.0));
  if (!(mean_null > 0.0) || !(var_null > 0.0)) {
    throw NumericalError("hsic_statistic: degenerate null moments");
  }
  const double shape = mean_null * mean_null / var_null;
  const double scale = var_null * nd / mean_null;
  r.threshold = boost::math::quantile(boost::math::gamma_distribution<double>(shape, scale), 1.0 - opt.alpha);
  return r;
}

inline HsicResult hsic_statistic(const Matrix& x, const Matrix& y, const HsicOptions& opt = {}) {
  if (x.cols() != 1 || y.cols() != 1) throw DimensionError("hsic_statistic: expects column vectors");
  return hsic_statistic(std::span<const double>(x.data(), static_cast<std::size_t>(x.rows())),
                        std::span<const double>(y.data(), static_cast<std::size_t>(y.rows())), opt);
}

// Differentiable n * HSIC_b of two n x 1 tape variables. Bandwidths come
// from the current values and are held fixed for the backward pass.
inline diff::Var hsic_loss(const diff::Var& x, const diff::Var& y) {
  if (x.cols() != 1 || y.cols() != 1 || x.rows() != y.rows()) {
    throw DimensionError("hsic_loss: expects two column vectors of equal length");
  }
  const Index n = x.rows();
  if (n < 8) throw DimensionError("hsic_loss: batch must have at least 8 rows");
  const Matrix& xv = x.value();
  const Matrix& yv = y.value();
  // A constant input has an all-ones kernel for any bandwidth, which
  // centring annihilates; fall back to 1 rather than failing mid-training.
  const auto bandwidth = [n](const Matrix& m) {
    try {
      return median_bandwidth(std::span<const double>(m.data(), static_cast<std::size_t>(n)),
                              static_cast<std::size_t>(n));
    } catch (const NumericalError&) {
      return 1.0;
    }
  };
  const double hx = bandwidth(xv);
  const double hy = bandwidth(yv);

  auto gram = [n](const Matrix& v, double h) {
    const Eigen::ArrayXd col = v.col(0).array();
    Matrix d = (col.replicate(1, n) - col.transpose().replicate(n, 1)).matrix();
    return Matrix((-d.array().square() / (2.0 * h * h)).exp());
  };
  auto center = [](const Matrix& g) {
    Matrix c = g;
    c.rowwise() -= g.colwise().mean();
    c.colwise() -= c.rowwise().mean();
    return c;
  };
  Matrix k = gram(xv, hx);
  Matrix l = gram(yv, hy);
  Matrix kc = center(k);
  Matrix lc = center(l);
  const double nd = static_cast<double>(n);
  Matrix value(1, 1);
  value(0, 0) = kc.cwiseProduct(lc).sum() / nd;

  diff::Tape* tape = x.tape();
  if (tape == nullptr || tape != y.tape()) throw TapeError("hsic_loss: operands live on different tapes");
  return tape->record(std::move(value), {x, y},
                      [k = std::move(k), l = std::move(l), kc = std::move(kc), lc = std::move(lc), hx, hy,
                       nd](const diff::BackpropContext& c) {
                        const double up = c.upstream(0, 0);
                        // dS/dv_i = -(2 / (n h^2)) sum_j G~other_ij G_ij (v_i - v_j)
                        auto grad = [&](const Matrix& v, const Matrix& g, const Matrix& other_c, double h) {
                          const Matrix w = g.cwiseProduct(other_c);
                          Matrix out = v.cwiseProduct(w.rowwise().sum()) - w * v;
                          return Matrix(out * (-2.0 * up / (nd * h * h)));
                        };
                        if (c.input_grads[0] != nullptr) *c.input_grads[0] += grad(*c.inputs[0], k, lc, hx);
                        if (c.input_grads[1] != nullptr) *c.input_grads[1] += grad(*c.inputs[1], l, kc, hy);
                      });
}

}  // namespace macrobottle::hsic
