#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "macrobottle/diffcore/matrix.hpp"
#include "macrobottle/diffcore/params.hpp"

namespace macrobottle::diff {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// tape that produced it has not been cleared.
class Var {
 public:
  Var() = default;

  [[nodiscard]] bool valid() const { return tape_ != nullptr; }
  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Index rows() const { return value().rows(); }
  [[nodiscard]] Index cols() const { return value().cols(); }
  // Value of a 1x1 node.
  [[nodiscard]] double scalar() const;
  [[nodiscard]] Tape* tape() const { return tape_; }
  [[nodiscard]] std::size_t index() const { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index, std::uint64_t generation)
      : tape_(tape), index_(index), generation_(generation) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
  std::uint64_t generation_ = 0;
};

// What a node's backward function sees. `input_grads[k]` is null when input k
// does not lead to any trainable leaf.
struct BackpropContext {
  const Matrix& upstream;
  const Matrix& output;
  std::span<const Matrix* const> inputs;
  std::span<Matrix* const> input_grads;
};

using Backprop = std::function<void(const BackpropContext&)>;

// Linear record of a forward computation. Nodes are appended in evaluation
// order, so a reverse sweep visits them in a valid topological order.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient.
  Var constant(Matrix value) { return push(std::move(value), {}, nullptr, false, nullptr); }

  // Leaf that receives a gradient readable through grad() after backward().
  Var variable(Matrix value) { return push(std::move(value), {}, nullptr, true, nullptr); }

  // Leaf bound to a parameter; backward() accumulates into `p.grad`. Binding
  // the same parameter twice returns the same node.
  Var param(Param& p) {
    if (auto it = bound_.find(&p); it != bound_.end()) return make_var(it->second);
    Var v = push(p.value, {}, nullptr, true, &p);
    bound_.emplace(&p, v.index_);
    return v;
  }
  Var param(ParamStore& store, const std::string& name) { return param(store.at(name)); }

  // Records an operation. The node requires a gradient iff any input does.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backprop backprop) {
    std::vector<std::size_t> idx;
    idx.reserve(inputs.size());
    bool needs = false;
    for (const Var& in : inputs) {
      check(in);
      idx.push_back(in.index_);
      needs = needs || nodes_[in.index_].requires_grad;
    }
    return push(std::move(value), std::move(idx), needs ? std::move(backprop) : nullptr, needs,
                nullptr);
  }

  // Reverse sweep from a 1x1 node. Parameter gradients accumulate (they are
  // not zeroed here); intermediate gradients are recomputed on every call.
  void backward(const Var& loss) {
    check(loss);
    const Node& root = nodes_[loss.index_];
    if (root.value.rows() != 1 || root.value.cols() != 1) {
      throw DimensionError("backward: loss must be 1x1, got " + shape_string(root.value));
    }
    if (!root.requires_grad) return;
    for (std::size_t i = 0; i <= loss.index_; ++i) {
      Node& n = nodes_[i];
      if (n.requires_grad) n.grad.setZero(n.value.rows(), n.value.cols());
    }
    nodes_[loss.index_].grad(0, 0) = 1.0;

    std::vector<const Matrix*> in_values;
    std::vector<Matrix*> in_grads;
    for (std::size_t i = loss.index_ + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.requires_grad || !n.backprop) continue;
      in_values.clear();
      in_grads.clear();
      for (std::size_t p : n.inputs) {
        in_values.push_back(&nodes_[p].value);
        in_grads.push_back(nodes_[p].requires_grad ? &nodes_[p].grad : nullptr);
      }
      n.backprop(BackpropContext{n.grad, n.value, in_values, in_grads});
    }
    for (std::size_t i = 0; i <= loss.index_; ++i) {
      Node& n = nodes_[i];
      if (n.param != nullptr) n.param->grad += n.grad;
    }
    has_gradients_ = true;
  }

  // Gradient of the most recent backward() with respect to `v`.
  [[nodiscard]] const Matrix& grad(const Var& v) const {
    check(v);
    if (!has_gradients_) throw TapeError("grad: no backward pass has been run");
    const Node& n = nodes_[v.index_];
    if (!n.requires_grad) throw TapeError("grad: node does not require a gradient");
    return n.grad;
  }

  [[nodiscard]] const Matrix& value(const Var& v) const {
    check(v);
    return nodes_[v.index_].value;
  }

  [[nodiscard]] bool requires_grad(const Var& v) const {
    check(v);
    return nodes_[v.index_].requires_grad;
  }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }

  // Drops every node; outstanding Vars become invalid.
  void clear() {
    nodes_.clear();
    bound_.clear();
    has_gradients_ = false;
    ++generation_;
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    Backprop backprop;
    Param* param = nullptr;
    bool requires_grad = false;
  };

  Var make_var(std::size_t index) { return Var(this, index, generation_); }

  Var push(Matrix value, std::vector<std::size_t> inputs, Backprop backprop, bool requires_grad,
           Param* param) {
    nodes_.push_back(Node{std::move(value), Matrix(), std::move(inputs), std::move(backprop), param,
                          requires_grad});
    return make_var(nodes_.size() - 1);
  }

  void check(const Var& v) const {
    if (v.tape_ != this) throw TapeError("variable was not recorded on this tape");
    if (v.generation_ != generation_ || v.index_ >= nodes_.size()) {
      throw TapeError("variable refers to a cleared tape");
    }
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Param*, std::size_t> bound_;
  std::uint64_t generation_ = 0;
  bool has_gradients_ = false;
};

inline const Matrix& Var::value() const {
  if (tape_ == nullptr) throw TapeError("use of an unrecorded variable");
  return tape_->value(*this);
}

inline double Var::scalar() const {
  const Matrix& m = value();
  if (m.rows() != 1 || m.cols() != 1) throw DimensionError("scalar(): node is " + shape_string(m));
  return m(0, 0);
}

}  // namespace macrobottle::diff
