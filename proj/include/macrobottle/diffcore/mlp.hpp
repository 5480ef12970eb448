#pragma once

#include <cmath>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "macrobottle/diffcore/ops.hpp"

namespace macrobottle::diff {

enum class Activation { tanh, identity };
enum class WeightConstraint { free, nonnegative };

// Fully connected stack. `activation` applies to hidden layers only; the
// output layer is always affine.
struct MlpSpec {
  std::vector<Index> layer_widths;
  Activation activation = Activation::tanh;
  WeightConstraint weight_constraint = WeightConstraint::free;

  void validate() const {
    if (layer_widths.size() < 2) throw DimensionError("MlpSpec: need at least two layer widths");
    for (Index w : layer_widths) {
      if (w < 1) throw DimensionError("MlpSpec: layer widths must be >= 1");
    }
  }
  [[nodiscard]] Index input_width() const { return layer_widths.front(); }
  [[nodiscard]] Index output_width() const { return layer_widths.back(); }
  [[nodiscard]] std::size_t layer_count() const { return layer_widths.size() - 1; }
};

inline std::string weight_name(std::string_view prefix, std::size_t layer) {
  return std::string(prefix) + ".W" + std::to_string(layer);
}
inline std::string bias_name(std::string_view prefix, std::size_t layer) {
  return std::string(prefix) + ".b" + std::to_string(layer);
}

struct MlpInit {
  // Start the last layer at exactly zero (weights and bias).
  bool zero_output_layer = false;
  double output_bias = 0.0;
};

// Glorot-uniform weights, zero biases. Nonnegative nets draw |U| instead.
inline void init_mlp(ParamStore& store, std::string_view prefix, const MlpSpec& spec, Rng& rng,
                     MlpInit init = {}) {
  spec.validate();
  const bool nonneg = spec.weight_constraint == WeightConstraint::nonnegative;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const Index in = spec.layer_widths[l];
    const Index out = spec.layer_widths[l + 1];
    const bool last = l + 1 == spec.layer_count();
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(in, out);
    for (Index i = 0; i < w.size(); ++i) {
      const double draw = u(rng);
      w.data()[i] = nonneg ? std::abs(draw) : draw;
    }
    Matrix b = Matrix::Zero(1, out);
    if (last && init.zero_output_layer) w.setZero();
    if (last) b.setConstant(init.output_bias);
    store.add(weight_name(prefix, l), std::move(w), nonneg);
    store.add(bias_name(prefix, l), std::move(b));
  }
}

// Records the forward pass on `tape`; parameters are bound as tape leaves so a
// later backward() fills their gradients.
inline Var mlp_forward(Tape& tape, const MlpSpec& spec, ParamStore& store, std::string_view prefix,
                       const Var& input) {
  spec.validate();
  if (input.cols() != spec.input_width()) {
    throw DimensionError("mlp_forward(" + std::string(prefix) + "): input has " +
                         std::to_string(input.cols()) + " columns, expected " +
                         std::to_string(spec.input_width()));
  }
  Var h = input;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    Var w = tape.param(store, weight_name(prefix, l));
    Var b = tape.param(store, bias_name(prefix, l));
    if (w.rows() != h.cols() || w.cols() != spec.layer_widths[l + 1]) {
      throw DimensionError("mlp_forward(" + std::string(prefix) + "): stored weight " +
                           shape_string(w.value()) + " does not match spec");
    }
    h = add_row(matmul(h, w), b);
    if (l + 1 < spec.layer_count() && spec.activation == Activation::tanh) h = tanh(h);
  }
  return h;
}

// Tape-free evaluation with the same arithmetic, for inference paths.
inline Matrix mlp_eval(const MlpSpec& spec, const ParamStore& store, std::string_view prefix,
                       const Matrix& input) {
  spec.validate();
  if (input.cols() != spec.input_width()) {
    throw DimensionError("mlp_eval(" + std::string(prefix) + "): input has " +
                         std::to_string(input.cols()) + " columns, expected " +
                         std::to_string(spec.input_width()));
  }
  Matrix h = input;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const Matrix& w = store.value(weight_name(prefix, l));
    const Matrix& b = store.value(bias_name(prefix, l));
    Matrix next = h * w;
    next.rowwise() += b.row(0);
    if (l + 1 < spec.layer_count() && spec.activation == Activation::tanh) {
      next = next.array().tanh().matrix();
    }
    h = std::move(next);
  }
  return h;
}

}  // namespace macrobottle::diff
