#include "dcpose/harness/ablate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "dcpose/harness/gen.hpp"
#include "dcpose/harness/hashing.hpp"
#include "dcpose/harness/train.hpp"
#include "dcpose/nn/checkpoint.hpp"

namespace dcpose {
namespace fs = std::filesystem;

const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> v = {"baseline", "hard_negative", "consistency", "full"};
  return v;
}

LossWeights variant_weights(const std::string& variant, const LossWeights& base) {
  LossWeights w = base;
  if (variant == "baseline") {
    w.alpha = 0, w.beta = 0;
  } else if (variant == "hard_negative") {
    w.alpha = 1, w.beta = 0;
  } else if (variant == "consistency") {
    w.alpha = 0, w.beta = 1;
  } else if (variant == "full") {
    w.alpha = 1, w.beta = 1;
  } else {
    throw ConfigError("ablate: unknown variant '" + variant + "'");
  }
  return w;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

const AblationRow* AblationTable::find(const std::string& variant) const {
  for (const auto& r : rows) {
    if (r.variant == variant) return &r;
  }
  return nullptr;
}

namespace {

bool has_final(const fs::path& dir, const std::string& hash) {
  const fs::path p = dir / "final.dcpk";
  if (!fs::exists(p)) return false;
  try {
    return nn::load_checkpoint(p).config_hash == hash;
  } catch (const DataError&) {
    return false;
  }
}

std::string cell(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f ± %.2f", m.mean, m.stddev);
  return buf;
}

}  // namespace

AblationTable run_ablation(const ExperimentConfig& cfg, const fs::path& out, const AblateOptions& opts) {
  cfg.validate();
  const fs::path train_dir = out / "data" / "train", test_dir = out / "data" / "test";
  fs::remove_all(out / "data");
  write_generated(generate_dataset(cfg, cfg.ablate.train_frames, derive_seed(cfg.seed, 7)), cfg, train_dir);
  write_generated(generate_dataset(cfg, cfg.ablate.test_frames, derive_seed(cfg.seed, 8)), cfg, test_dir);
  const BopDataset train = read_bop(train_dir);
  const BopDataset test = read_bop(test_dir);

  AblationTable table;
  table.config_hash = cfg.hash();
  for (const auto& variant : ablation_variants()) {
    if (std::find(cfg.ablate.variants.begin(), cfg.ablate.variants.end(), variant) == cfg.ablate.variants.end()) continue;
    AblationRow row;
    row.variant = variant;
    std::vector<double> re, te, add10;
    for (int s = 0; s < cfg.ablate.seeds; ++s) {
      ExperimentConfig run = cfg;
      run.loss = variant_weights(variant, cfg.loss);
      run.seed = derive_seed(cfg.seed, 100 + s);
      const fs::path dir = out / "runs" / (variant + "_s" + std::to_string(s));
      if (!(opts.reuse_runs && has_final(dir, run.hash()))) {
        fs::remove_all(dir);
        if (opts.verbose) std::cerr << "ablate: training " << variant << " seed " << s << '\n';
        train_model(run, train, dir);
      }
      const EvalReport rep = evaluate_checkpoint(dir / "final.dcpk", test);
      write_report(rep, dir / "eval");
      const auto& a = rep.aggregates;
      if (opts.verbose) {
        std::cerr << "ablate: " << variant << " seed " << s << " RE " << a.mean_re_deg << " TE " << a.mean_te_mm
                  << " ADD-10 " << a.add10_pct << '\n';
      }
      row.seeds.push_back(a);
      re.push_back(a.mean_re_deg);
      te.push_back(a.mean_te_mm);
      add10.push_back(a.add10_pct);
    }
    row.re_deg = mean_std(re);
    row.te_mm = mean_std(te);
    row.add10_pct = mean_std(add10);
    table.rows.push_back(std::move(row));
  }
  write_ablation(table, out);
  return table;
}

void write_ablation(const AblationTable& table, const fs::path& out) {
  fs::create_directories(out);
  std::ofstream csv(out / "ablation.csv");
  csv << "variant,re_mean,re_std,te_mean,te_std,add10_mean,add10_std\n";
  std::ofstream md(out / "ablation.md");
  md << "| variant | RE (deg) | TE (mm) | ADD-10 (%) |\n|---|---|---|---|\n";
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.variant.c_str(), r.re_deg.mean,
                  r.re_deg.stddev, r.te_mm.mean, r.te_mm.stddev, r.add10_pct.mean, r.add10_pct.stddev);
    csv << buf;
    md << "| " << r.variant << " | " << cell(r.re_deg) << " | " << cell(r.te_mm) << " | " << cell(r.add10_pct) << " |\n";
    nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
    for (const auto& a : r.seeds) {
      seeds.push_back({{"mean_re_deg", a.mean_re_deg}, {"mean_te_mm", a.mean_te_mm}, {"add10_pct", a.add10_pct},
                       {"avg_acc_pct", a.avg_acc_pct}, {"dice", a.dice}, {"map_pct", a.map_pct}, {"solved", a.solved},
                       {"frames", a.frames}});
    }
    rows.push_back({{"variant", r.variant},
                    {"re_deg", {{"mean", r.re_deg.mean}, {"std", r.re_deg.stddev}}},
                    {"te_mm", {{"mean", r.te_mm.mean}, {"std", r.te_mm.stddev}}},
                    {"add10_pct", {{"mean", r.add10_pct.mean}, {"std", r.add10_pct.stddev}}},
                    {"seeds", seeds}});
  }
  nlohmann::ordered_json j = {{"config_hash", table.config_hash}, {"revision", build_revision()}, {"rows", rows}};
  std::ofstream(out / "ablation.json") << j.dump(1) << '\n';
}

void cmd_ablate(const ExperimentConfig& cfg, const fs::path& out, bool verbose) {
  AblateOptions opts;
  opts.verbose = verbose;
  run_ablation(cfg, out, opts);
}

}  // namespace dcpose
