#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "macrobottle/diffcore/tape.hpp"

// Differentiable operations over Tape variables. Every op validates shapes
// before computing and records a closed-form backward rule.

namespace macrobottle::diff {

namespace detail {

inline Tape& same_tape(const Var& a, const Var& b, const char* op) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw TapeError(std::string(op) + ": operands live on different tapes");
  }
  return *a.tape();
}

inline Tape& tape_of(const Var& a, const char* op) {
  if (a.tape() == nullptr) throw TapeError(std::string(op) + ": unrecorded operand");
  return *a.tape();
}

inline void require_same(const Var& a, const Var& b, const char* op) {
  require_same_shape(a.value(), b.value(), op);
}

}  // namespace detail

// a (n x k) times b (k x m).
inline Var matmul(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + shape_string(a.value()) + " times " + shape_string(b.value()));
  }
  Matrix out = a.value() * b.value();
  return t.record(std::move(out), {a, b}, [](const BackpropContext& c) {
    if (c.input_grads[0]) c.input_grads[0]->noalias() += c.upstream * c.inputs[1]->transpose();
    if (c.input_grads[1]) c.input_grads[1]->noalias() += c.inputs[0]->transpose() * c.upstream;
  });
}

inline Var add(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b, "add");
  detail::require_same(a, b, "add");
  return t.record(a.value() + b.value(), {a, b}, [](const BackpropContext& c) {
    if (c.input_grads[0]) *c.input_grads[0] += c.upstream;
    if (c.input_grads[1]) *c.input_grads[1] += c.upstream;
  });
}

inline Var sub(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b, "sub");
  detail::require_same(a, b, "sub");
  return t.record(a.value() - b.value(), {a, b}, [](const BackpropContext& c) {
    if (c.input_grads[0]) *c.input_grads[0] += c.upstream;
    if (c.input_grads[1]) *c.input_grads[1] -= c.upstream;
  });
}

// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b, "mul");
  detail::require_same(a, b, "mul");
  return t.record(a.value().cwiseProduct(b.value()), {a, b}, [](const BackpropContext& c) {
    if (c.input_grads[0]) *c.input_grads[0] += c.upstream.cwiseProduct(*c.inputs[1]);
    if (c.input_grads[1]) *c.input_grads[1] += c.upstream.cwiseProduct(*c.inputs[0]);
  });
}

// Elementwise quotient.
inline Var div(const Var& a, const Var& b) {
  Tape& t = detail::same_tape(a, b, "div");
  detail::require_same(a, b, "div");
  return t.record(a.value().cwiseQuotient(b.value()), {a, b}, [](const BackpropContext& c) {
    if (c.input_grads[0]) *c.input_grads[0] += c.upstream.cwiseQuotient(*c.inputs[1]);
    if (c.input_grads[1]) {
      *c.input_grads[1] -= c.upstream.cwiseProduct(c.output).cwiseQuotient(*c.inputs[1]);
    }
  });
}

inline Var scale(const Var& a, double s) {
  Tape& t = detail::tape_of(a, "scale");
  return t.record(a.value() * s, {a}, [s](const BackpropContext& c) {
    if (c.input_grads[0]) *c.input_grads[0] += c.upstream * s;
  });
}

inline Var add_scalar(const Var& a, double s) {
  Tape& t = detail::tape_of(a, "add_scalar");
  return t.record(a.value().array() + s, {a}, [](const BackpropContext& c) {
    if (c.input_grads[0]) *c.input_grads[0] += c.upstream;
  });
}

// a (n x m) plus a row vector r (1 x m) broadcast over rows.
inline Var add_row(const Var& a, const Var& r) {
  Tape& t = detail::same_tape(a, r, "add_row");
  if (r.rows() != 1 || r.cols() != a.cols()) {
    throw DimensionError("add_row: " + shape_string(a.value()) + " plus " + shape_string(r.value()));
  }
  Matrix out = a.value().rowwise() + r.value().row(0);
  return t.record(std::move(out), {a, r}, [](const BackpropContext& c) {
    if (c.input_grads[0]) *c.input_grads[0] += c.upstream;
    if (c.input_grads[1]) *c.input_grads[1] += c.upstream.colwise().sum();
  });
}

// a (n x m) times a row vector r (1 x m) broadcast over rows, elementwise.
inline Var mul_row(const Var& a, const Var& r) {
  Tape& t = detail::same_tape(a, r, "mul_row");
  if (r.rows() != 1 || r.cols() != a.cols()) {
    throw DimensionError("mul_row: " + shape_string(a.value()) + " times " + shape_string(r.value()));
  }
  Matrix out = a.value().array().rowwise() * r.value().row(0).array();
  return t.record(std::move(out), {a, r}, [](const BackpropContext& c) {
    if (c.input_grads[0]) {
      c.input_grads[0]->array() += c.upstream.array().rowwise() * c.inputs[1]->row(0).array();
    }
    if (c.input_grads[1]) {
      *c.input_grads[1] += c.upstream.cwiseProduct(*c.inputs[0]).colwise().sum();
    }
  });
}

inline Var tanh(const Var& a) {
  Tape& t = detail::tape_of(a, "tanh");
  Matrix out = a.value().array().tanh();
  return t.record(std::move(out), {a}, [](const BackpropContext& c) {
    if (c.input_grads[0]) {
      c.input_grads[0]->array() += c.upstream.array() * (1.0 - c.output.array().square());
    }
  });
}

inline Var exp(const Var& a) {
  Tape& t = detail::tape_of(a, "exp");
  Matrix out = a.value().array().exp();
  return t.record(std::move(out), {a}, [](const BackpropContext& c) {
    if (c.input_grads[0]) c.input_grads[0]->array() += c.upstream.array() * c.output.array();
  });
}

inline Var square(const Var& a) {
  Tape& t = detail::tape_of(a, "square");
  Matrix out = a.value().array().square();
  return t.record(std::move(out), {a}, [](const BackpropContext& c) {
    if (c.input_grads[0]) c.input_grads[0]->array() += 2.0 * c.upstream.array() * c.inputs[0]->array();
  });
}

// Elementwise clamp; the gradient is zero wherever the bound is active.
inline Var clamp(const Var& a, double lo, double hi) {
  Tape& t = detail::tape_of(a, "clamp");
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return t.record(std::move(out), {a}, [lo, hi](const BackpropContext& c) {
    if (!c.input_grads[0]) return;
    const auto& x = c.inputs[0]->array();
    c.input_grads[0]->array() += ((x >= lo) && (x <= hi)).cast<double>() * c.upstream.array();
  });
}

inline Var sum(const Var& a) {
  Tape& t = detail::tape_of(a, "sum");
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return t.record(std::move(out), {a}, [](const BackpropContext& c) {
    if (c.input_grads[0]) c.input_grads[0]->array() += c.upstream(0, 0);
  });
}

inline Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw DimensionError("mean: empty operand");
  return scale(sum(a), 1.0 / n);
}

// Columns [start, start + count) of a.
inline Var slice_cols(const Var& a, Index start, Index count) {
  Tape& t = detail::tape_of(a, "slice_cols");
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " + shape_string(a.value()));
  }
  Matrix out = a.value().middleCols(start, count);
  return t.record(std::move(out), {a}, [start, count](const BackpropContext& c) {
    if (c.input_grads[0]) c.input_grads[0]->middleCols(start, count) += c.upstream;
  });
}

// Subtracts each column's mean.
inline Var center_cols(const Var& a) {
  Tape& t = detail::tape_of(a, "center_cols");
  if (a.rows() == 0) throw DimensionError("center_cols: empty operand");
  Matrix out = a.value().rowwise() - a.value().colwise().mean();
  return t.record(std::move(out), {a}, [](const BackpropContext& c) {
    if (c.input_grads[0]) {
      *c.input_grads[0] += c.upstream.rowwise() - c.upstream.colwise().mean();
    }
  });
}

// Value copied onto the tape as a constant: gradients stop here.
inline Var detach(const Var& a) { return detail::tape_of(a, "detach").constant(a.value()); }

}  // namespace macrobottle::diff
