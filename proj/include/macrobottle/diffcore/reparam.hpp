#pragma once

#include <random>

#include "macrobottle/diffcore/ops.hpp"

namespace macrobottle::diff {

inline constexpr double kLogvarMin = -20.0;
inline constexpr double kLogvarMax = 5.0;

// Standard normal draws, filled row by row from `rng`.
inline Matrix standard_normal(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = n(rng);
  return out;
}

// z = mu + exp(logvar / 2) * eps with eps ~ N(0, 1). logvar is clamped to
// [kLogvarMin, kLogvarMax]; gradients flow to both mu and logvar.
inline Var gaussian_reparam(const Var& mu, const Var& logvar, Rng& rng) {
  if (mu.tape() == nullptr || mu.tape() != logvar.tape()) {
    throw TapeError("gaussian_reparam: operands live on different tapes");
  }
  require_same_shape(mu.value(), logvar.value(), "gaussian_reparam");
  Tape& t = *mu.tape();
  Var eps = t.constant(standard_normal(mu.rows(), mu.cols(), rng));
  Var sigma = exp(scale(clamp(logvar, kLogvarMin, kLogvarMax), 0.5));
  return add(mu, mul(sigma, eps));
}

}  // namespace macrobottle::diff
