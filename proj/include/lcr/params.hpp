#pragma once

// Named parameter storage, per-tape binding, and finite-difference checking.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lcr/tensor.hpp"

namespace lcr {

template <typename Scalar>
class BasicParamStore {
 public:
  using Mat = MatrixX<Scalar>;

  bool contains(const std::string& name) const { return values_.count(name) != 0; }

  const Mat& at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
  }
  Mat& at(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw ContractError("unknown parameter '" + name + "'");
    return it->second;
  }

  void set(const std::string& name, Mat value) { values_[name] = std::move(value); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [k, v] : values_) out.push_back(k);
    return out;
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [k, v] : values_) n += static_cast<std::size_t>(v.size());
    return n;
  }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  std::size_t size() const { return values_.size(); }

  bool operator==(const BasicParamStore&) const = default;

 private:
  std::map<std::string, Mat> values_;
};

using ParamStore = BasicParamStore<double>;
using Gradients = std::map<std::string, Matrix>;

// Lazily places parameters on a tape as gradient-tracking leaves, one leaf per
// name, and collects their gradients after backward().
template <typename Scalar>
class BasicBinding {
 public:
  using Mat = MatrixX<Scalar>;

  BasicBinding(BasicTape<Scalar>& tape, const BasicParamStore<Scalar>& params, bool track = true)
      : tape_(tape), params_(params), track_(track) {}

  BasicVar<Scalar> operator()(const std::string& name) {
    auto it = bound_.find(name);
    if (it != bound_.end()) return it->second;
    const Mat& v = params_.at(name);
    auto var = track_ ? tape_.variable(v) : tape_.constant(v);
    bound_.emplace(name, var);
    return var;
  }

  BasicTape<Scalar>& tape() { return tape_; }
  const BasicParamStore<Scalar>& params() const { return params_; }

  // Gradient for every bound parameter; unreached parameters get zeros.
  std::map<std::string, Mat> gradients() const {
    std::map<std::string, Mat> out;
    for (const auto& [name, var] : bound_) out.emplace(name, var.grad());
    return out;
  }

 private:
  BasicTape<Scalar>& tape_;
  const BasicParamStore<Scalar>& params_;
  bool track_;
  std::map<std::string, BasicVar<Scalar>> bound_;
};

using Binding = BasicBinding<double>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  std::size_t checked = 0;
};

// Builds the scalar loss on a fresh tape from bound parameters.
template <typename Scalar>
using LossBuilder = std::function<BasicVar<Scalar>(BasicTape<Scalar>&, BasicBinding<Scalar>&)>;

// Compares reverse-mode gradients against central differences for every scalar
// in the named parameters: max |analytic - numeric| / max(1, |analytic|).
template <typename Scalar>
GradCheckReport grad_check(BasicParamStore<Scalar>& params, const std::vector<std::string>& names,
                           const LossBuilder<Scalar>& fn, Scalar eps = Scalar(1e-5)) {
  std::map<std::string, MatrixX<Scalar>> analytic;
  {
    BasicTape<Scalar> tape;
    BasicBinding<Scalar> bind(tape, params);
    for (const auto& n : names) bind(n);
    auto loss = fn(tape, bind);
    if (!std::isfinite(static_cast<double>(loss.item())))
      throw EvaluationError("grad_check: loss is not finite");
    tape.backward(loss);
    analytic = bind.gradients();
  }
  auto evaluate = [&]() -> Scalar {
    BasicTape<Scalar> tape;
    BasicBinding<Scalar> bind(tape, params, false);
    const Scalar v = fn(tape, bind).item();
    if (!std::isfinite(static_cast<double>(v)))
      throw EvaluationError("grad_check: loss is not finite under perturbation");
    return v;
  };

  GradCheckReport report;
  for (const auto& name : names) {
    auto& value = params.at(name);
    const auto& grad = analytic.at(name);
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const Scalar saved = value.data()[i];
      value.data()[i] = saved + eps;
      const Scalar up = evaluate();
      value.data()[i] = saved - eps;
      const Scalar down = evaluate();
      value.data()[i] = saved;
      const double numeric = static_cast<double>((up - down) / (Scalar(2) * eps));
      const double a = static_cast<double>(grad.data()[i]);
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      ++report.checked;
      if (report.worst_index < 0 || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace lcr
