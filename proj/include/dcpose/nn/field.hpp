#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dcpose/nn/ops.hpp"
#include "dcpose/random.hpp"

namespace dcpose::nn {

struct LatentFieldConfig {
  std::vector<int> hidden = {128, 128, 128, 128};
  int embedding_dim = 12;
  double omega0 = 30.0;

  void validate() const {
    if (hidden.empty() || embedding_dim < 1 || !(omega0 > 0)) throw InvalidArgument("LatentFieldConfig: invalid sizes");
    for (int h : hidden) {
      if (h < 1) throw InvalidArgument("LatentFieldConfig: hidden width must be positive");
    }
  }
};

/// Sinusoidal MLP from normalized surface coordinates to unit embeddings.
/// Every hidden layer computes sin(omega0 * (W x + b)); the last layer is
/// linear and followed by row normalization.
template <typename T>
class LatentField {
 public:
  LatentField(LatentFieldConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    int fan_in = 3;
    std::vector<int> widths = cfg_.hidden;
    widths.push_back(cfg_.embedding_dim);
    for (std::size_t l = 0; l < widths.size(); ++l) {
      const int fan_out = widths[l];
      const double wb = l == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / cfg_.omega0;
      const double bb = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::vector<T> w(static_cast<std::size_t>(fan_in) * fan_out), b(fan_out);
      for (auto& v : w) v = static_cast<T>(uniform(rng, -wb, wb));
      for (auto& v : b) v = static_cast<T>(uniform(rng, -bb, bb));
      weights_.push_back(Tensor<T>::parameter({fan_in, fan_out}, std::move(w)));
      biases_.push_back(Tensor<T>::parameter({fan_out}, std::move(b)));
      fan_in = fan_out;
    }
  }

  const LatentFieldConfig& config() const { return cfg_; }

  /// points [N,3] -> [N,E], unit rows.
  Tensor<T> forward(const Tensor<T>& points) const {
    if (points.rank() != 2 || points.dim(1) != 3) throw InvalidArgument("LatentField: expected [N,3] points");
    Tensor<T> h = points;
    const std::size_t last = weights_.size() - 1;
    for (std::size_t l = 0; l < last; ++l) h = sine(add_bias(matmul(h, weights_[l]), biases_[l]), static_cast<T>(cfg_.omega0));
    return l2_normalize_rows(add_bias(matmul(h, weights_[last]), biases_[last]));
  }

  ParameterList<T> parameters() const {
    ParameterList<T> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.push_back({"field.w" + std::to_string(l), weights_[l]});
      out.push_back({"field.b" + std::to_string(l), biases_[l]});
    }
    return out;
  }

 private:
  LatentFieldConfig cfg_;
  std::vector<Tensor<T>> weights_;
  std::vector<Tensor<T>> biases_;
};

}  // namespace dcpose::nn
