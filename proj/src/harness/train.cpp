#include "dcpose/harness/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "dcpose/harness/hashing.hpp"
#include "dcpose/harness/model.hpp"
#include "dcpose/loss/objective.hpp"
#include "dcpose/loss/pairs.hpp"
#include "dcpose/nn/adam.hpp"
#include "dcpose/nn/checkpoint.hpp"

namespace dcpose {
namespace fs = std::filesystem;

CropSample augment_crop(const CropSample& crop, std::mt19937_64& rng) {
  CropSample out = crop;
  const int S = crop.size;
  const std::size_t plane = static_cast<std::size_t>(S) * S;
  const double contrast = uniform(rng, 0.7, 1.3);
  for (int c = 0; c < 3; ++c) {
    const double gain = uniform(rng, 0.75, 1.25), offset = uniform(rng, -0.2, 0.2);
    double mean = 0;
    for (std::size_t i = 0; i < plane; ++i) mean += crop.rgb[c * plane + i];
    mean /= static_cast<double>(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      float& v = out.rgb[c * plane + i];
      v = static_cast<float>((v - mean) * contrast + mean * gain + offset);
    }
  }
  const double sigma = uniform(rng, 0.0, 0.08);
  for (auto& v : out.rgb) v = static_cast<float>(v + sigma * normal(rng));

  if (uniform01(rng) < 0.5) {
    const int w = 1 + static_cast<int>(uniform(rng, 0.1, 0.4) * S), h = 1 + static_cast<int>(uniform(rng, 0.1, 0.4) * S);
    const int x0 = static_cast<int>(uniform_index(rng, S - w + 1)), y0 = static_cast<int>(uniform_index(rng, S - h + 1));
    const double fill[3] = {uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1)};
    std::size_t remaining = 0;
    for (int y = 0; y < S; ++y) {
      for (int x = 0; x < S; ++x) remaining += crop.mask.at(x, y) && !(x >= x0 && x < x0 + w && y >= y0 && y < y0 + h);
    }
    if (remaining > 0) {
      for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) {
          for (int c = 0; c < 3; ++c) out.rgb[c * plane + y * S + x] = static_cast<float>(fill[c]);
          out.mask.at(x, y) = 0;
        }
      }
    }
  }
  return out;
}

fs::path step_checkpoint_path(const fs::path& dir, int step) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%06d.dcpk", step);
  return dir / buf;
}

namespace {

int latest_step(const fs::path& dir) {
  int best = -1;
  if (!fs::is_directory(dir)) return best;
  for (const auto& e : fs::directory_iterator(dir)) {
    int step;
    if (std::sscanf(e.path().filename().c_str(), "step_%d.dcpk", &step) == 1) best = std::max(best, step);
  }
  return best;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
void save_state(const ExperimentConfig& cfg, const PoseNetwork<T>& net, const nn::Adam<T>& adam, int step,
                const fs::path& path) {
  nn::Checkpoint ck;
  ck.config_hash = cfg.hash();
  ck.blocks.push_back(nn::make_text_block("config", cfg.to_text()));
  const double s = step;
  ck.blocks.push_back(nn::make_block<double>("train.step", {1}, std::span<const double>(&s, 1)));
  nn::append_state<T>(ck, net.parameters(), &adam);
  nn::save_checkpoint(ck, path);
}

template <typename T>
TrainSummary train_impl(const ExperimentConfig& cfg, const BopDataset& data, const fs::path& out,
                        const TrainOptions& opts) {
  const auto model_it = data.models.find(kTargetObjId);
  if (model_it == data.models.end()) throw DataError("train: dataset has no model for obj_id " + std::to_string(kTargetObjId));
  const SurfaceSampler sampler(model_it->second);

  std::vector<CropSample> crops;
  for (const auto& f : data.frames) {
    try {
      crops.push_back(make_crop(f.record, kTargetObjId, cfg.train.crop, cfg.train.crop_padding));
    } catch (const InvalidArgument&) {
      // target fully occluded in this frame
    }
  }
  if (crops.empty()) throw DataError("train: no frame shows the target part");

  fs::create_directories(out);
  PoseNetwork<T> net(cfg, derive_seed(cfg.seed, 1));
  nn::Adam<T> adam;
  adam.add_group(net.encoder.parameters(), cfg.train.lr_encoder);
  adam.add_group(net.field.parameters(), cfg.train.lr_field);

  int start = 0;
  std::vector<std::string> log_rows;
  const fs::path log_path = out / "loss.csv";
  const std::string header = "step,L_penNCE,L_M,L_con,total,alpha,beta";
  if (opts.resume && latest_step(out) >= 0) {
    start = latest_step(out);
    const nn::Checkpoint ck = nn::load_checkpoint(step_checkpoint_path(out, start));
    if (ck.config_hash != cfg.hash()) throw ConfigError("train: checkpoint in " + out.string() + " was written with a different config");
    nn::restore_state<T>(ck, net.parameters(), &adam);
    std::ifstream in(log_path);
    std::string line;
    while (std::getline(in, line)) {
      int s;
      if (std::sscanf(line.c_str(), "%d,", &s) == 1 && s <= start) log_rows.push_back(line);
    }
    if (static_cast<int>(log_rows.size()) != start) throw DataError("train: loss.csv does not cover the resumed checkpoint");
  } else {
    save_state(cfg, net, adam, 0, step_checkpoint_path(out, 0));
  }
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw DataError("train: cannot write " + log_path.string());
  log << header << '\n';
  for (const auto& r : log_rows) log << r << '\n';
  log.flush();

  int last_good = start;
  const int S = cfg.train.crop, half = cfg.train.batch / 2;
  const std::uint64_t step_stream = derive_seed(cfg.seed, 2);
  const int end = opts.stop_after >= 0 ? std::min(opts.stop_after, cfg.train.steps) : cfg.train.steps;
  auto abort = [&](int step, const std::string& why) {
    nlohmann::ordered_json a = {{"step", step}, {"reason", why}, {"last_good_checkpoint", step_checkpoint_path(out, last_good).filename().string()}};
    std::ofstream(out / "abort.json") << a.dump(1) << '\n';
    throw NumericalAbort("train: " + why + " at step " + std::to_string(step), step);
  };

  for (int step = start + 1; step <= end; ++step) {
    std::mt19937_64 rng(derive_seed(step_stream, step));
    std::vector<CropSample> batch;
    batch.reserve(cfg.train.batch);
    for (int b = 0; b < cfg.train.batch; ++b) {
      const CropSample& src = crops[uniform_index(rng, crops.size())];
      batch.push_back(b < half ? src : augment_crop(src, rng));
    }
    std::vector<const CropSample*> ptrs;
    std::vector<PairBatch> pairs;
    std::vector<std::uint8_t> labels;
    std::vector<Eigen::Vector3d> negatives;
    for (int j = 0; j < cfg.train.negatives; ++j) negatives.push_back(sampler.normalized_point(sampler.sample(rng)));
    for (const auto& c : batch) {
      ptrs.push_back(&c);
      pairs.push_back(sample_pairs(c.mask, c.coord_map, sampler, cfg.train.positives, 0, rng()));
      pairs.back().negatives = negatives;
      labels.insert(labels.end(), c.mask.data().begin(), c.mask.data().end());
    }
    const auto enc = net.encoder.forward(crop_batch<T>(ptrs));
    auto loss = total_loss<T>(pairs, enc, S, S, labels, net.field, cfg.loss);
    const double total = static_cast<double>(loss.total.item());
    if (!std::isfinite(total)) abort(step, "non-finite loss");
    adam.zero_grad();
    loss.total.backward();
    for (auto& s : adam.slots()) {
      for (T g : s.param.tensor.grad()) {
        if (!std::isfinite(static_cast<double>(g))) abort(step, "non-finite gradient");
      }
    }
    adam.step();

    log << step << ',' << fmt(loss.pen_nce) << ',' << fmt(loss.mask) << ',' << fmt(loss.con) << ',' << fmt(total) << ','
        << fmt(cfg.loss.alpha) << ',' << fmt(cfg.loss.beta) << '\n';
    if (opts.verbose && (step % 50 == 0 || step == 1)) {
      std::cerr << "step " << step << " total " << total << " nce " << loss.pen_nce << " mask " << loss.mask << " con "
                << loss.con << '\n';
    }
    if (step % cfg.train.checkpoint_every == 0 || step == cfg.train.steps) {
      log.flush();
      save_state(cfg, net, adam, step, step_checkpoint_path(out, step));
      last_good = step;
    }
  }
  log.flush();

  TrainSummary summary;
  summary.last_step = std::max(start, end);
  if (end == cfg.train.steps) {
    summary.checkpoint = out / "final.dcpk";
    save_state(cfg, net, adam, end, summary.checkpoint);
  } else {
    summary.checkpoint = step_checkpoint_path(out, last_good);
  }
  return summary;
}

}  // namespace

TrainSummary train_model(const ExperimentConfig& cfg, const BopDataset& data, const fs::path& out,
                         const TrainOptions& opts) {
  cfg.validate();
  if (cfg.train.precision == Precision::kFloat32) return train_impl<float>(cfg, data, out, opts);
  return train_impl<double>(cfg, data, out, opts);
}

void cmd_train(const ExperimentConfig& cfg, const fs::path& data, const fs::path& out, const TrainOptions& opts) {
  const BopDataset ds = read_bop(data);
  const TrainSummary s = train_model(cfg, ds, out, opts);
  nlohmann::ordered_json m = {{"config_hash", cfg.hash()},
                              {"revision", build_revision()},
                              {"data_hash", hash_tree(data)},
                              {"frames", ds.frames.size()},
                              {"last_step", s.last_step},
                              {"checkpoint", s.checkpoint.filename().string()}};
  std::ofstream(out / "train_manifest.json") << m.dump(1) << '\n';
}

}  // namespace dcpose
