#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "macrobottle/hsic.hpp"
#include "test_support.hpp"

namespace mb = macrobottle;
namespace hsic = macrobottle::hsic;
namespace diff = macrobottle::diff;
using mb::Index;
using mb::Matrix;
using mb::testing::finite_difference;
using mb::testing::random_matrix;
using mb::testing::relative_error;

namespace {

std::vector<double> normal_sample(std::size_t n, mb::Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

struct DenseOracle {
  double statistic;
  double threshold;
};

// Dense Gram matrices, explicit centring matrix, and the textbook moment
// formulas, all as plain loops.
DenseOracle dense_hsic(const std::vector<double>& x, const std::vector<double>& y, double hx, double hy) {
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  std::vector<std::vector<double>> k(n, std::vector<double>(n)), l = k, h = k;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      k[i][j] = std::exp(-(x[i] - x[j]) * (x[i] - x[j]) / (2 * hx * hx));
      l[i][j] = std::exp(-(y[i] - y[j]) * (y[i] - y[j]) / (2 * hy * hy));
      h[i][j] = (i == j ? 1.0 : 0.0) - 1.0 / nd;
    }
  }
  auto mul = [n](const auto& a, const auto& b) {
    std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][m] * b[m][j];
    return c;
  };
  const auto kc = mul(mul(h, k), h);
  const auto lc = mul(mul(h, l), h);
  const auto prod = mul(k, lc);
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace += prod[i][i];

  double v = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double e = kc[i][j] * lc[i][j] / 6.0;
      v += e * e;
      mx += k[i][j];
      my += l[i][j];
    }
  }
  v = 72.0 * (nd - 4) * (nd - 5) / (nd * (nd - 1) * (nd - 2) * (nd - 3)) * v / (nd * (nd - 1));
  mx /= nd * (nd - 1);
  my /= nd * (nd - 1);
  const double m = (1 + mx * my - mx - my) / nd;
  const double shape = m * m / v;
  const double scale = v * nd / m;
  return {trace / nd, boost::math::gamma_p_inv(shape, 0.95) * scale};
}

}  // namespace

TEST(MedianBandwidth, SmallClosedForms) {
  EXPECT_EQ(hsic::median_bandwidth(std::vector<double>{0, 1}), 1.0);
  EXPECT_EQ(hsic::median_bandwidth(std::vector<double>{0, 1, 2}), 1.0);
  EXPECT_EQ(hsic::median_bandwidth(std::vector<double>{0, 1, 2, 3}), 1.5);
  EXPECT_THROW(hsic::median_bandwidth(std::vector<double>{2, 2, 2}), mb::NumericalError);
  EXPECT_THROW(hsic::median_bandwidth(std::vector<double>{1}), mb::NumericalError);
}

TEST(MedianBandwidth, MatchesFullPairwiseMedian) {
  mb::Rng rng(1);
  const auto x = normal_sample(1000, rng);
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) d.push_back(std::abs(x[i] - x[j]));
  std::sort(d.begin(), d.end());
  const double expect = 0.5 * (d[d.size() / 2 - 1] + d[d.size() / 2]);
  EXPECT_EQ(hsic::median_bandwidth(x, 1000), expect);
  // Subsampled estimates are deterministic per seed.
  const auto big = normal_sample(3000, rng);
  EXPECT_EQ(hsic::median_bandwidth(big, 500, 4), hsic::median_bandwidth(big, 500, 4));
}

TEST(HsicStatistic, MatchesDenseOracle) {
  mb::Rng rng(2);
  const auto x = normal_sample(50, rng);
  auto y = normal_sample(50, rng);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.8 * x[i] * x[i];
  const hsic::HsicResult r = hsic::hsic_statistic(x, y);
  const DenseOracle o = dense_hsic(x, y, r.bandwidth_x, r.bandwidth_y);
  EXPECT_NEAR(r.statistic, o.statistic, 1e-10);
  EXPECT_NEAR(r.threshold, o.threshold, 1e-10);
  EXPECT_EQ(r.n, 50u);
}

TEST(HsicStatistic, SymmetricPermutationInvariantNonNegative) {
  mb::Rng rng(3);
  const auto x = normal_sample(200, rng);
  const auto y = normal_sample(200, rng);
  const auto a = hsic::hsic_statistic(x, y);
  const auto b = hsic::hsic_statistic(y, x);
  EXPECT_NEAR(a.statistic, b.statistic, 1e-12);
  EXPECT_NEAR(a.threshold, b.threshold, 1e-12);
  EXPECT_GE(a.statistic, 0.0);

  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> px(200), py(200);
  for (std::size_t i = 0; i < 200; ++i) {
    px[i] = x[perm[i]];
    py[i] = y[perm[i]];
  }
  EXPECT_NEAR(hsic::hsic_statistic(px, py).statistic, a.statistic, 1e-10);
}

TEST(HsicStatistic, Errors) {
  EXPECT_THROW(hsic::hsic_statistic(std::vector<double>{1, 2, 3, 4, 5, 6}, std::vector<double>{1, 2, 3}),
               mb::DimensionError);
  EXPECT_THROW(hsic::hsic_statistic(std::vector<double>{1, 2, 3, 4, 5, 6}, std::vector<double>(6, 1.0)),
               mb::NumericalError);
}

TEST(HsicStatistic, LevelAndPower) {
  mb::Rng rng(4);
  int false_alarms = 0, detections = 0;
  for (int t = 0; t < 100; ++t) {
    const auto x = normal_sample(500, rng);
    auto y = x;
    std::shuffle(y.begin(), y.end(), rng);
    if (hsic::hsic_statistic(x, y).rejects_independence()) ++false_alarms;
    if (hsic::hsic_statistic(x, x).rejects_independence()) ++detections;
  }
  EXPECT_LE(false_alarms, 10);
  EXPECT_EQ(detections, 100);
}

TEST(HsicStatistic, TypeOneErrorOverIndependentPairs) {
  mb::Rng rng(5);
  int rejections = 0;
  for (int t = 0; t < 200; ++t) {
    const auto x = normal_sample(200, rng);
    const auto y = normal_sample(200, rng);
    if (hsic::hsic_statistic(x, y).rejects_independence()) ++rejections;
  }
  EXPECT_LE(rejections, 20);
}

TEST(HsicStatistic, SubsampleKnob) {
  mb::Rng rng(6);
  const auto x = normal_sample(3000, rng);
  const auto y = normal_sample(3000, rng);
  hsic::HsicOptions opt;
  opt.max_points = 400;
  opt.seed = 9;
  const auto a = hsic::hsic_statistic(x, y, opt);
  EXPECT_EQ(a.n, 400u);
  EXPECT_EQ(a.statistic, hsic::hsic_statistic(x, y, opt).statistic);
}

TEST(HsicLoss, EqualsStatisticOnTheSameBatch) {
  mb::Rng rng(7);
  const Matrix x = random_matrix(40, 1, rng);
  const Matrix y = x.array().square().matrix() + 0.2 * random_matrix(40, 1, rng);
  diff::Tape tape;
  const double loss = hsic::hsic_loss(tape.constant(x), tape.constant(y)).scalar();
  EXPECT_NEAR(loss, hsic::hsic_statistic(x, y).statistic, 1e-10);
}

TEST(HsicLoss, ConstantInputGivesZero) {
  mb::Rng rng(8);
  diff::Tape tape;
  const double loss =
      hsic::hsic_loss(tape.constant(random_matrix(20, 1, rng)), tape.constant(Matrix::Constant(20, 1, 3.0)))
          .scalar();
  EXPECT_NEAR(loss, 0.0, 1e-12);
}

TEST(HsicLoss, GradientMatchesFiniteDifferences) {
  mb::Rng rng(9);
  Matrix x = random_matrix(16, 1, rng);
  Matrix y = x.array().sin().matrix() + 0.3 * random_matrix(16, 1, rng);
  diff::Tape tape;
  diff::Var vx = tape.variable(x);
  diff::Var vy = tape.variable(y);
  const diff::Var loss = hsic::hsic_loss(vx, vy);
  tape.backward(loss);
  const Matrix gx = tape.grad(vx);
  const Matrix gy = tape.grad(vy);
  const double hx = hsic::median_bandwidth(std::vector<double>(x.data(), x.data() + 16), 16);
  const double hy = hsic::median_bandwidth(std::vector<double>(y.data(), y.data() + 16), 16);
  // Bandwidths are constants of the backward pass; hold them fixed here too.
  auto fixed = [&] {
    return dense_hsic(std::vector<double>(x.data(), x.data() + 16), std::vector<double>(y.data(), y.data() + 16),
                      hx, hy)
        .statistic;
  };
  EXPECT_LT(relative_error(gx, finite_difference(x, fixed)), 1e-4);
  EXPECT_LT(relative_error(gy, finite_difference(y, fixed)), 1e-4);
  EXPECT_THROW(hsic::hsic_loss(tape.constant(Matrix::Zero(4, 1)), tape.constant(Matrix::Zero(4, 1))),
               mb::DimensionError);
}
