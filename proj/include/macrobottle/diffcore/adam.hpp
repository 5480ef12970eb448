#pragma once

#include <cmath>

#include "macrobottle/diffcore/params.hpp"

namespace macrobottle::diff {

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled decay: values shrink by learning_rate * weight_decay per step.
  double weight_decay = 0.0;
};

// One bias-corrected Adam update over every parameter in the store. The step
// counter lives in the store so that separately stepped stores stay
// independent. Nonnegative parameters are clipped back to zero afterwards.
inline void adam_step(ParamStore& store, double learning_rate, AdamConstants k = {}) {
  store.set_step(store.step() + 1);
  const double t = static_cast<double>(store.step());
  const double correction1 = 1.0 - std::pow(k.beta1, t);
  const double correction2 = 1.0 - std::pow(k.beta2, t);
  for (auto& [_, p] : store) {
    if (k.weight_decay > 0.0) p.value *= 1.0 - learning_rate * k.weight_decay;
    p.first_moment = k.beta1 * p.first_moment + (1.0 - k.beta1) * p.grad;
    p.second_moment = k.beta2 * p.second_moment + (1.0 - k.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= learning_rate * (p.first_moment.array() / correction1) /
                       ((p.second_moment.array() / correction2).sqrt() + k.epsilon);
    if (p.nonnegative) p.value = p.value.cwiseMax(0.0);
  }
}

}  // namespace macrobottle::diff
