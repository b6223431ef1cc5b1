#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dcpose/nn/tensor.hpp"

namespace dcpose::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over named parameter groups, each with its own learning rate.
template <typename T>
class Adam {
 public:
  struct Slot {
    NamedParameter<T> param;
    double lr;
    std::vector<T> m;
    std::vector<T> v;
  };

  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  void add_group(const ParameterList<T>& params, double lr) {
    if (!(lr > 0)) throw InvalidArgument("Adam: learning rate must be positive");
    for (const auto& p : params) {
      const std::size_t n = p.tensor.size();
      slots_.push_back({p, lr, std::vector<T>(n, T(0)), std::vector<T>(n, T(0))});
    }
  }

  void zero_grad() {
    for (auto& s : slots_) {
      s.param.tensor.grad();
      s.param.tensor.zero_grad();
    }
  }

  void step() {
    ++step_;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(step_));
    for (auto& s : slots_) {
      auto value = s.param.tensor.value();
      auto grad = s.param.tensor.grad();
      const T b1 = static_cast<T>(opts_.beta1), b2 = static_cast<T>(opts_.beta2);
      for (std::size_t i = 0; i < value.size(); ++i) {
        const T g = grad[i];
        s.m[i] = b1 * s.m[i] + (T(1) - b1) * g;
        s.v[i] = b2 * s.v[i] + (T(1) - b2) * g * g;
        const double m_hat = s.m[i] / c1;
        const double v_hat = s.v[i] / c2;
        value[i] -= static_cast<T>(s.lr * m_hat / (std::sqrt(v_hat) + opts_.eps));
      }
    }
  }

  long step_count() const { return step_; }
  void set_step_count(long s) { step_ = s; }
  std::vector<Slot>& slots() { return slots_; }
  const std::vector<Slot>& slots() const { return slots_; }

 private:
  AdamOptions opts_;
  std::vector<Slot> slots_;
  long step_ = 0;
};

}  // namespace dcpose::nn
