#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dcpose/harness/config.hpp"
#include "dcpose/harness/eval.hpp"

namespace dcpose {

/// Loss weights of an ablation variant: baseline (0, 0), hard_negative (1, 0), consistency (0, 1), full (1, 1).
LossWeights variant_weights(const std::string& variant, const LossWeights& base);

/// Table row order.
const std::vector<std::string>& ablation_variants();

struct MeanStd {
  double mean = 0;
  double stddev = 0;  // sample standard deviation, 0 for a single seed
};

MeanStd mean_std(const std::vector<double>& values);

struct AblationRow {
  std::string variant;
  std::vector<EvalAggregates> seeds;
  MeanStd re_deg;
  MeanStd te_mm;
  MeanStd add10_pct;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::string config_hash;

  const AblationRow* find(const std::string& variant) const;
};

struct AblateOptions {
  bool verbose = false;
  bool reuse_runs = true;  // skip training when final.dcpk with the same config hash exists
};

/// Generates data/train and data/test, trains every variant on every seed under runs/,
/// evaluates on data/test and writes ablation.csv, ablation.json and ablation.md.
AblationTable run_ablation(const ExperimentConfig& cfg, const std::filesystem::path& out, const AblateOptions& opts = {});

void write_ablation(const AblationTable& table, const std::filesystem::path& out);

void cmd_ablate(const ExperimentConfig& cfg, const std::filesystem::path& out, bool verbose = false);

}  // namespace dcpose
