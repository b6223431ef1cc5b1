#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dcpose/errors.hpp"

namespace dcpose::nn {

using Shape = std::vector<int>;

inline std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, [](std::size_t a, int d) { return a * d; });
}

inline std::string shape_string(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

/// Storage with a fixed SIMD alignment, so vectorized reductions sum in the same
/// order on every run.
template <typename T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
struct Node {
  Shape shape;
  Buffer<T> value;
  Buffer<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

/// Reference-counted handle to a node of a dynamically built computation graph.
template <typename T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<T> values) { return make_leaf(std::move(shape), std::move(values), false); }
  static Tensor parameter(Shape shape, std::vector<T> values) { return make_leaf(std::move(shape), std::move(values), true); }
  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_size(shape);
    return make_leaf(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
  }
  static Tensor scalar(T v) { return constant({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(int i) const { return node_->shape.at(i); }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<T> value() { return node_->value; }
  std::span<const T> value() const { return node_->value; }
  std::span<T> grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  T item() const {
    if (size() != 1) throw InvalidArgument("Tensor::item: tensor of shape " + shape_string(shape()) + " is not a scalar");
    return node_->value[0];
  }

  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), T(0)); }

  /// Reverse sweep from this scalar; accumulates into every reachable leaf's grad.
  void backward() {
    if (size() != 1) throw InvalidArgument("Tensor::backward: output must be a scalar");
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        Node<T>* p = n->parents[next++].get();
        if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    node_->ensure_grad();
    node_->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<T>* n = *it;
      if (n->backward_fn) {
        n->ensure_grad();
        n->backward_fn();
      }
    }
  }

  /// Copy without graph history.
  Tensor detach() const { return constant(shape(), std::vector<T>(node_->value.begin(), node_->value.end())); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }

 private:
  static Tensor make_leaf(Shape shape, std::vector<T> values, bool requires_grad) {
    if (shape_size(shape) != values.size()) {
      throw InvalidArgument("Tensor: shape " + shape_string(shape) + " does not match " + std::to_string(values.size()) +
                            " values");
    }
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value.assign(values.begin(), values.end());
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  std::shared_ptr<Node<T>> node_;
};

/// Allocates an op result wired to its inputs. The result requires grad iff any input does.
template <typename T>
Tensor<T> make_result(Shape shape, std::initializer_list<Tensor<T>> inputs) {
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value.assign(shape_size(n->shape), T(0));
  for (const auto& in : inputs) {
    if (in.requires_grad()) {
      n->requires_grad = true;
    }
    n->parents.push_back(in.shared());
  }
  return Tensor<T>(std::move(n));
}

/// Named trainable tensor, the unit of optimization and checkpointing.
template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

template <typename T>
using ParameterList = std::vector<NamedParameter<T>>;

}  // namespace dcpose::nn
