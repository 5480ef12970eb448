#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "macrobottle/dataset.hpp"

// Synthetic paired datasets with known macrovariables.
//
// Both X and Y are 8x8 grey-scale images stored row-major (pixel r*8 + c).
// In the main scenario x1/x2 live in the left (columns 0-3) / right
// (columns 4-7) half of X, and y1/y2 in the top (rows 0-3) / bottom
// (rows 4-7) half of Y. Every pixel of a half starts at its macrovariable's
// value; uniform pixel noise is added on top.

namespace macrobottle::datagen {

inline constexpr Index kImageSide = 8;
inline constexpr Index kImagePixels = kImageSide * kImageSide;

struct NoiseAmplitudes {
  double structural = 0.2;  // n^X_1, n^Y_1, n^Y_2 ~ U[-a, a]
  double pixel = 0.2;       // per-pixel U[-a, a]
};

struct GeneratorOptions {
  NoiseAmplitudes noise;
  SplitFractions fractions;
};

inline bool in_left_half(Index pixel) { return pixel % kImageSide < kImageSide / 2; }
inline bool in_top_half(Index pixel) { return pixel / kImageSide < kImageSide / 2; }

namespace detail {

inline double uniform(Rng& rng, double a) {
  if (a == 0.0) return 0.0;
  return std::uniform_real_distribution<double>(-a, a)(rng);
}

}  // namespace detail

// x1 := c1 + n^X_1, y1 := c1^3 + n^Y_1, y2 := tanh(x2) + n^Y_2 with
// c1, x2 ~ U[-1, 1].
inline DatasetPair gen_main_synthetic(Index n, std::uint64_t seed, GeneratorOptions opt = {}) {
  if (n < 1) throw DataError("gen_main_synthetic: n must be >= 1");
  Rng rng(seed);
  DatasetPair pair;
  pair.x.resize(n, kImagePixels);
  pair.y.resize(n, kImagePixels);
  GroundTruthRecord t;
  t.model = "main";
  const auto un = static_cast<std::size_t>(n);
  for (auto* v : {&t.c1, &t.x1, &t.x2, &t.y1, &t.y2, &t.noise_x1, &t.noise_y1, &t.noise_y2}) {
    v->resize(un);
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    t.c1[s] = unit(rng);
    t.x2[s] = unit(rng);
    t.noise_x1[s] = detail::uniform(rng, opt.noise.structural);
    t.noise_y1[s] = detail::uniform(rng, opt.noise.structural);
    t.noise_y2[s] = detail::uniform(rng, opt.noise.structural);
    t.x1[s] = t.c1[s] + t.noise_x1[s];
    t.y1[s] = t.c1[s] * t.c1[s] * t.c1[s] + t.noise_y1[s];
    t.y2[s] = std::tanh(t.x2[s]) + t.noise_y2[s];
    for (Index p = 0; p < kImagePixels; ++p) {
      pair.x(i, p) = (in_left_half(p) ? t.x1[s] : t.x2[s]) + detail::uniform(rng, opt.noise.pixel);
    }
    for (Index p = 0; p < kImagePixels; ++p) {
      pair.y(i, p) = (in_top_half(p) ? t.y1[s] : t.y2[s]) + detail::uniform(rng, opt.noise.pixel);
    }
  }
  pair.truth = std::move(t);
  pair.split = make_split(n, seed, opt.fractions);
  return pair;
}

// One macrovariable per side: x1 ~ U[-1, 1] fills all of X and y1 = x1^2
// fills all of Y. From Y alone the sign of x1 is unrecoverable.
inline DatasetPair gen_asymmetric(Index n, std::uint64_t seed, GeneratorOptions opt = {}) {
  if (n < 1) throw DataError("gen_asymmetric: n must be >= 1");
  Rng rng(seed);
  DatasetPair pair;
  pair.x.resize(n, kImagePixels);
  pair.y.resize(n, kImagePixels);
  GroundTruthRecord t;
  t.model = "asymmetric";
  const auto un = static_cast<std::size_t>(n);
  for (auto* v : {&t.c1, &t.x1, &t.x2, &t.y1, &t.y2, &t.noise_x1, &t.noise_y1, &t.noise_y2}) {
    v->assign(un, 0.0);
  }
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    t.x1[s] = unit(rng);
    t.y1[s] = t.x1[s] * t.x1[s];
    for (Index p = 0; p < kImagePixels; ++p) pair.x(i, p) = t.x1[s] + detail::uniform(rng, opt.noise.pixel);
    for (Index p = 0; p < kImagePixels; ++p) pair.y(i, p) = t.y1[s] + detail::uniform(rng, opt.noise.pixel);
  }
  pair.truth = std::move(t);
  pair.split = make_split(n, seed, opt.fractions);
  return pair;
}

// Half-averages read back from the pixels: x = (left, right) of X and
// y = (top, bottom) of Y, one row per sample.
struct MacroReadout {
  Matrix x;
  Matrix y;
};

inline MacroReadout macro_readout(const DatasetPair& pair) {
  if (pair.x.cols() != kImagePixels || pair.y.cols() != kImagePixels) {
    throw DataError("macro_readout: expected 64-pixel images, got " +
                    std::to_string(pair.x.cols()) + " and " + std::to_string(pair.y.cols()) +
                    " columns");
  }
  const Index n = pair.x.rows();
  MacroReadout out{Matrix::Zero(n, 2), Matrix::Zero(n, 2)};
  const double half = static_cast<double>(kImagePixels / 2);
  for (Index i = 0; i < n; ++i) {
    for (Index p = 0; p < kImagePixels; ++p) {
      out.x(i, in_left_half(p) ? 0 : 1) += pair.x(i, p);
      out.y(i, in_top_half(p) ? 0 : 1) += pair.y(i, p);
    }
  }
  out.x /= half;
  out.y /= half;
  return out;
}

// Largest absolute violation of the recorded structural equations (0 when
// the record is exactly consistent). Also checks the latent ranges.
inline double structural_violation(const GroundTruthRecord& t) {
  double worst = 0.0;
  auto note = [&worst](double v) { worst = std::max(worst, std::abs(v)); };
  auto range = [&note](double v) { note(std::max(0.0, std::abs(v) - 1.0)); };
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.model == "asymmetric") {
      range(t.x1[i]);
      note(t.y1[i] - t.x1[i] * t.x1[i]);
    } else if (t.model == "main") {
      range(t.c1[i]);
      range(t.x2[i]);
      note(t.x1[i] - (t.c1[i] + t.noise_x1[i]));
      note(t.y1[i] - (t.c1[i] * t.c1[i] * t.c1[i] + t.noise_y1[i]));
      note(t.y2[i] - (std::tanh(t.x2[i]) + t.noise_y2[i]));
    } else {
      throw DataError("structural_violation: unknown scenario '" + t.model + "'");
    }
  }
  return worst;
}

}  // namespace macrobottle::datagen
