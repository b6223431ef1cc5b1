#include "dcpose/harness/model.hpp"

namespace dcpose {

nn::PixelEncoderConfig encoder_config(const ExperimentConfig& cfg) {
  nn::PixelEncoderConfig enc = cfg.encoder;
  enc.embedding_dim = cfg.field.embedding_dim;
  enc.input_size = cfg.train.crop;
  return enc;
}

template struct PoseNetwork<double>;
template struct PoseNetwork<float>;

}  // namespace dcpose
