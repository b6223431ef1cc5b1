#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dcpose/nn/ops.hpp"
#include "dcpose/random.hpp"

namespace dcpose::nn {

struct PixelEncoderConfig {
  int levels = 3;
  int base_channels = 16;
  int max_channels = 64;
  int embedding_dim = 12;
  int input_size = 128;

  int channels_at(int level) const { return std::min(max_channels, base_channels << level); }

  void validate() const {
    if (levels < 0 || base_channels < 1 || max_channels < base_channels || embedding_dim < 1) {
      throw InvalidArgument("PixelEncoderConfig: invalid sizes");
    }
    if (input_size < 1 || input_size % (1 << levels) != 0) {
      throw InvalidArgument("PixelEncoderConfig: input size must be divisible by 2^levels");
    }
  }
};

template <typename T>
struct EncoderOutput {
  Tensor<T> embeddings;  // [N*H*W, E], unit rows
  Tensor<T> logits;      // [N*H*W, 1]
};

/// Small U-Net. Each level is two 3x3 conv + ReLU blocks; levels are linked by
/// 2x2 average pooling on the way down and nearest upsampling plus skip
/// concatenation on the way up. A 1x1 head emits E embedding channels and one
/// mask logit per pixel.
template <typename T>
class PixelEncoder {
 public:
  PixelEncoder(PixelEncoderConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    int in = 3;
    for (int l = 0; l <= cfg_.levels; ++l) {
      const int c = cfg_.channels_at(l);
      add_conv(rng, "enc" + std::to_string(l) + "a", in, c, 3);
      add_conv(rng, "enc" + std::to_string(l) + "b", c, c, 3);
      in = c;
    }
    for (int l = cfg_.levels - 1; l >= 0; --l) {
      const int c = cfg_.channels_at(l);
      add_conv(rng, "dec" + std::to_string(l) + "a", in + c, c, 3);
      add_conv(rng, "dec" + std::to_string(l) + "b", c, c, 3);
      in = c;
    }
    add_conv(rng, "head", in, cfg_.embedding_dim + 1, 1);
  }

  const PixelEncoderConfig& config() const { return cfg_; }

  /// crops [N,3,S,S] with S = input_size.
  EncoderOutput<T> forward(const Tensor<T>& crops) const {
    if (crops.rank() != 4 || crops.dim(1) != 3 || crops.dim(2) != cfg_.input_size || crops.dim(3) != cfg_.input_size) {
      throw InvalidArgument("PixelEncoder: expected [N,3," + std::to_string(cfg_.input_size) + "," +
                            std::to_string(cfg_.input_size) + "] input, got " + shape_string(crops.shape()));
    }
    std::size_t layer = 0;
    auto block = [&](Tensor<T> x) {
      x = relu(conv2d(x, weights_[layer], biases_[layer]));
      ++layer;
      x = relu(conv2d(x, weights_[layer], biases_[layer]));
      ++layer;
      return x;
    };
    std::vector<Tensor<T>> skips;
    Tensor<T> x = crops;
    for (int l = 0; l <= cfg_.levels; ++l) {
      if (l > 0) x = avg_pool2(x);
      x = block(x);
      skips.push_back(x);
    }
    for (int l = cfg_.levels - 1; l >= 0; --l) x = block(concat_channels(upsample2(x), skips[l]));
    const Tensor<T> rows = to_rows(conv2d(x, weights_[layer], biases_[layer]));
    const int E = cfg_.embedding_dim;
    return {l2_normalize_rows(slice_cols(rows, 0, E)), slice_cols(rows, E, E + 1)};
  }

  ParameterList<T> parameters() const {
    ParameterList<T> out;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      out.push_back({"encoder." + names_[i] + ".w", weights_[i]});
      out.push_back({"encoder." + names_[i] + ".b", biases_[i]});
    }
    return out;
  }

 private:
  void add_conv(std::mt19937_64& rng, std::string name, int in, int out, int k) {
    const int fan_in = in * k * k;
    const double bound = std::sqrt(6.0 / fan_in);
    std::vector<T> w(static_cast<std::size_t>(out) * fan_in);
    for (auto& v : w) v = static_cast<T>(uniform(rng, -bound, bound));
    weights_.push_back(Tensor<T>::parameter({out, in, k, k}, std::move(w)));
    biases_.push_back(Tensor<T>::zeros({out}, true));
    names_.push_back(std::move(name));
  }

  PixelEncoderConfig cfg_;
  std::vector<Tensor<T>> weights_;
  std::vector<Tensor<T>> biases_;
  std::vector<std::string> names_;
};

}  // namespace dcpose::nn
