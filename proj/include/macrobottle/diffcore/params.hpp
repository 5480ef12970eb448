#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "macrobottle/diffcore/matrix.hpp"

namespace macrobottle::diff {

// One trainable tensor with its gradient accumulator and Adam moments.
struct Param {
  Matrix value;
  Matrix grad;
  Matrix first_moment;
  Matrix second_moment;
  // Projected onto [0, inf) after every optimizer step.
  bool nonnegative = false;
};

class ParamStore {
 public:
  Param& add(const std::string& name, Matrix init, bool nonnegative = false) {
    if (!init.allFinite()) throw NumericalError("parameter '" + name + "' has non-finite entries");
    auto [it, inserted] = params_.try_emplace(name);
    if (!inserted) throw Error("duplicate parameter '" + name + "'");
    Param& p = it->second;
    p.grad = Matrix::Zero(init.rows(), init.cols());
    p.first_moment = Matrix::Zero(init.rows(), init.cols());
    p.second_moment = Matrix::Zero(init.rows(), init.cols());
    p.nonnegative = nonnegative;
    p.value = std::move(init);
    if (nonnegative) p.value = p.value.cwiseMax(0.0);
    return p;
  }

  [[nodiscard]] bool contains(const std::string& name) const { return params_.contains(name); }

  Param& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
    return it->second;
  }
  const Param& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
    return it->second;
  }

  Matrix& value(const std::string& name) { return at(name).value; }
  const Matrix& value(const std::string& name) const { return at(name).value; }

  void zero_grad() {
    for (auto& [_, p] : params_) p.grad.setZero();
  }

  [[nodiscard]] std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  [[nodiscard]] std::size_t size() const { return params_.size(); }
  [[nodiscard]] Index scalar_count() const {
    Index n = 0;
    for (const auto& [_, p] : params_) n += p.value.size();
    return n;
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Param> params_;
  std::int64_t step_ = 0;
};

}  // namespace macrobottle::diff
