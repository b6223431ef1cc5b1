#pragma once

#include <cstdint>
#include <vector>

#include "dcpose/harness/config.hpp"
#include "dcpose/harness/crop.hpp"
#include "dcpose/nn/encoder.hpp"
#include "dcpose/nn/field.hpp"
#include "dcpose/pose/correspondences.hpp"

namespace dcpose {

nn::PixelEncoderConfig encoder_config(const ExperimentConfig& cfg);

/// The latent field and the pixel encoder trained together.
template <typename T>
struct PoseNetwork {
  nn::LatentField<T> field;
  nn::PixelEncoder<T> encoder;

  PoseNetwork(const ExperimentConfig& cfg, std::uint64_t seed)
      : field(cfg.field, derive_seed(seed, 101)), encoder(encoder_config(cfg), derive_seed(seed, 102)) {}

  nn::ParameterList<T> parameters() const {
    nn::ParameterList<T> out = encoder.parameters();
    for (auto& p : field.parameters()) out.push_back(p);
    return out;
  }
};

/// Stacks crops into an [N, 3, S, S] constant.
template <typename T>
nn::Tensor<T> crop_batch(const std::vector<const CropSample*>& crops) {
  if (crops.empty()) throw InvalidArgument("crop_batch: no crops");
  const int S = crops.front()->size;
  std::vector<T> values;
  values.reserve(crops.size() * 3 * S * S);
  for (const CropSample* c : crops) {
    if (c->size != S) throw InvalidArgument("crop_batch: mixed crop sizes");
    for (float v : c->rgb) values.push_back(static_cast<T>(v));
  }
  return nn::Tensor<T>::constant({static_cast<int>(crops.size()), 3, S, S}, std::move(values));
}

/// Runs the field over the bank's normalized points.
template <typename T>
void embed_key_bank(const PoseNetwork<T>& net, KeyBank& bank) {
  const int K = static_cast<int>(bank.normalized_points.size());
  std::vector<T> pts;
  pts.reserve(3 * K);
  for (const auto& p : bank.normalized_points) pts.insert(pts.end(), {T(p.x()), T(p.y()), T(p.z())});
  const auto e = net.field.forward(nn::Tensor<T>::constant({K, 3}, std::move(pts)));
  const int E = e.dim(1);
  bank.embeddings.resize(K, E);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < E; ++j) bank.embeddings(i, j) = static_cast<double>(e.value()[i * E + j]);
  }
}

/// Encoder output of one crop as a dense map with sigmoid mask probabilities.
template <typename T>
DenseEmbeddingMap embed_crop(const PoseNetwork<T>& net, const CropSample& crop) {
  const auto out = net.encoder.forward(crop_batch<T>({&crop}));
  const int S = crop.size, E = out.embeddings.dim(1);
  DenseEmbeddingMap map;
  map.width = map.height = S;
  map.embeddings.resize(S * S, E);
  map.mask_probs.resize(S * S);
  for (int p = 0; p < S * S; ++p) {
    for (int j = 0; j < E; ++j) map.embeddings(p, j) = static_cast<double>(out.embeddings.value()[p * E + j]);
    map.mask_probs[p] = 1.0 / (1.0 + std::exp(-static_cast<double>(out.logits.value()[p])));
  }
  return map;
}

}  // namespace dcpose
