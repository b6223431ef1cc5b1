#pragma once

#include <cstdint>
#include <filesystem>

#include "dcpose/harness/config.hpp"
#include "dcpose/synth/bop.hpp"
#include "dcpose/synth/instrument.hpp"

namespace dcpose {

struct GeneratedSet {
  BopDataset dataset;
  RejectionStats rejections;
  long attempts = 0;
  std::uint64_t seed = 0;
};

/// `frames` accepted frames. Frame i uses scene, pose and light streams derived from (seed, i).
GeneratedSet generate_dataset(const ExperimentConfig& cfg, int frames, std::uint64_t seed);

/// BOP tree plus gen_manifest.json (seed, rejection histogram, filter thresholds, config hash).
void write_generated(const GeneratedSet& set, const ExperimentConfig& cfg, const std::filesystem::path& out);

/// gen command: cfg.gen.frames frames from cfg.seed.
void cmd_gen(const ExperimentConfig& cfg, const std::filesystem::path& out);

}  // namespace dcpose
