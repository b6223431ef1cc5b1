#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dcpose/geometry/pose.hpp"
#include "dcpose/loss/losses.hpp"
#include "dcpose/nn/encoder.hpp"
#include "dcpose/nn/field.hpp"
#include "dcpose/pose/correspondences.hpp"
#include "dcpose/pose/ransac.hpp"
#include "dcpose/synth/instrument.hpp"

namespace dcpose {

/// Flat `key = value` text with `#` comments. Throws ConfigError with the line number on malformed input.
std::map<std::string, std::string> parse_key_values(const std::string& text);

enum class Precision { kFloat64, kFloat32 };

struct GenSettings {
  int frames = 200;
  int width = 128;
  int height = 128;
  double fx = 180;
  double fy = 180;
  SamplerOptions sampler;
  BackdropOptions backdrop;
};

struct TrainSettings {
  int steps = 2000;
  int batch = 20;
  int crop = 128;
  int positives = 1024;
  int negatives = 1024;
  double lr_encoder = 3e-4;
  double lr_field = 3e-5;
  int checkpoint_every = 500;
  Precision precision = Precision::kFloat64;
  double crop_padding = 1.25;
};

struct InferSettings {
  int key_bank = 4096;
  CorrespondenceOptions correspondences;
  RansacConfig ransac;
};

struct AblateSettings {
  int seeds = 3;
  int train_frames = 200;
  int test_frames = 50;
  std::vector<std::string> variants = {"baseline", "hard_negative", "consistency", "full"};
};

/// Every tunable of the pipeline. Unknown keys are rejected.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  GenSettings gen;
  TrainSettings train;
  LossWeights loss;
  nn::LatentFieldConfig field;
  nn::PixelEncoderConfig encoder;
  InferSettings infer;
  AblateSettings ablate;

  static ExperimentConfig from_text(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// All keys in a fixed order; from_text(to_text()) reproduces the config.
  std::string to_text() const;
  /// SHA-256 of to_text(), hex.
  std::string hash() const;

  CameraIntrinsics intrinsics() const;
  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// obj_id of the part whose pose is estimated.
inline constexpr int kTargetObjId = InstrumentSpec::obj_id(kWrist);

}  // namespace dcpose
