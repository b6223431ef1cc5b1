#pragma once

#include <filesystem>
#include <random>
#include <vector>

#include "dcpose/harness/config.hpp"
#include "dcpose/harness/crop.hpp"
#include "dcpose/synth/bop.hpp"

namespace dcpose {

/// The "aug-syn" domain: per-channel gain and offset, contrast, Gaussian noise and
/// an optional rectangular occluder that also clears the mask beneath it.
CropSample augment_crop(const CropSample& crop, std::mt19937_64& rng);

struct TrainOptions {
  bool resume = false;  // continue from the latest step checkpoint in the output directory
  int stop_after = -1;  // stop once this step is reached (simulated interruption); -1 runs to the end
  bool verbose = false;
};

struct TrainSummary {
  int last_step = 0;
  std::filesystem::path checkpoint;  // final.dcpk, or the last step checkpoint when stopped early
};

/// Writes step_SSSSSS.dcpk every checkpoint_every steps (and at step 0), final.dcpk and loss.csv.
/// A non-finite loss or gradient throws NumericalAbort; abort.json records the step and
/// the last good checkpoint, which is left in place.
TrainSummary train_model(const ExperimentConfig& cfg, const BopDataset& data, const std::filesystem::path& out,
                         const TrainOptions& opts = {});

void cmd_train(const ExperimentConfig& cfg, const std::filesystem::path& data, const std::filesystem::path& out,
               const TrainOptions& opts = {});

std::filesystem::path step_checkpoint_path(const std::filesystem::path& dir, int step);

}  // namespace dcpose
