#include "dcpose/harness/eval.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numbers>

#include "dcpose/harness/crop.hpp"
#include "dcpose/harness/hashing.hpp"
#include "dcpose/harness/model.hpp"
#include "dcpose/harness/parallel.hpp"
#include "dcpose/nn/checkpoint.hpp"
#include "dcpose/pose/ransac.hpp"

namespace dcpose {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string frame_key(int scene_id, int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d_%06d", scene_id, frame_id);
  return buf;
}

namespace {

std::optional<double> frame_oks(const RigidPose& pred, bool solved, const PartRecord& gt, const SurfaceModel& model,
                                const CameraIntrinsics& K) {
  if (model.keypoints.empty()) return std::nullopt;
  std::vector<Keypoint2D> kp_gt, kp_pred;
  bool any = false;
  for (const auto& [name, p] : model.keypoints) {
    const Eigen::Vector3d cg = gt.pose.apply(p);
    Keypoint2D g;
    g.visible = cg.z() > 1e-9;
    if (g.visible) {
      const Eigen::Vector2d uv = project(cg, K);
      g = {uv.x(), uv.y(), uv.x() >= -0.5 && uv.y() >= -0.5 && uv.x() <= K.width - 0.5 && uv.y() <= K.height - 0.5};
    }
    any = any || g.visible;
    kp_gt.push_back(g);
    Keypoint2D q{1e12, 1e12, true};
    const Eigen::Vector3d cp = pred.apply(p);
    if (solved && cp.z() > 1e-9) {
      const Eigen::Vector2d uv = project(cp, K);
      q = {uv.x(), uv.y(), true};
    }
    kp_pred.push_back(q);
  }
  if (!any) return std::nullopt;
  if (!solved) return 0.0;
  int x0 = gt.mask_visib.width(), y0 = gt.mask_visib.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < gt.mask_visib.height(); ++y) {
    for (int x = 0; x < gt.mask_visib.width(); ++x) {
      if (!gt.mask_visib.at(x, y)) continue;
      x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x), y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  const double scale = std::sqrt(static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1)));
  return oks(kp_pred, kp_gt, scale, 0.1);
}

template <typename T>
EvalReport evaluate_network(const ExperimentConfig& cfg, const nn::Checkpoint& ck, const BopDataset& data,
                            std::vector<double>* timings) {
  PoseNetwork<T> net(cfg, derive_seed(cfg.seed, 1));
  nn::restore_state<T>(ck, net.parameters(), nullptr);
  const auto it = data.models.find(kTargetObjId);
  if (it == data.models.end()) throw DataError("eval: dataset has no model for obj_id " + std::to_string(kTargetObjId));
  const SurfaceModel& model = it->second;
  KeyBank bank = sample_key_bank(model, cfg.infer.key_bank, derive_seed(cfg.seed, 3));
  embed_key_bank(net, bank);

  const int n = static_cast<int>(data.frames.size());
  std::vector<FrameResult> rows(n);
  std::vector<double> times(n);
  parallel_for(n, [&](int i) {
    const auto t0 = std::chrono::steady_clock::now();
    const BopFrame& f = data.frames[i];
    const PartRecord& gt = f.record.part(kTargetObjId);
    const CameraIntrinsics& K = f.record.intrinsics;
    const std::string id = frame_key(f.scene_id, f.frame_id);
    PnpResult res;
    if (gt.px_count_visib >= 4) {
      const CropSample crop = make_crop(f.record, kTargetObjId, cfg.train.crop, cfg.train.crop_padding);
      const DenseEmbeddingMap map = embed_crop(net, crop);
      const CorrespondenceSet corrs =
          build_correspondences(map, bank, crop.window, K, cfg.infer.correspondences, derive_seed(cfg.seed, 4 + 2 * i));
      RansacConfig rc = cfg.infer.ransac;
      rc.seed = derive_seed(cfg.seed, 5 + 2 * i);
      res = ransac_pnp(corrs, rc);
    }
    rows[i] = score_frame(id, res.solved, res.pose, gt, model, K);
    rows[i].inliers = static_cast<int>(res.inliers.size());
    rows[i].mean_reprojection_px = res.solved ? res.mean_error : 0.0;
    times[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  });
  if (timings) *timings = times;
  EvalReport r;
  r.rows = std::move(rows);
  r.aggregates = aggregate(r.rows);
  r.config_hash = cfg.hash();
  r.revision = build_revision();
  return r;
}

ordered_json pose_json(const RigidPose& p) {
  ordered_json R = ordered_json::array(), t = ordered_json::array();
  for (int i = 0; i < 9; ++i) R.push_back(p.rotation(i / 3, i % 3));
  for (int i = 0; i < 3; ++i) t.push_back(p.translation[i]);
  return {{"R", R}, {"t", t}};
}

ordered_json aggregates_json(const EvalAggregates& a) {
  return {{"frames", a.frames},         {"solved", a.solved},       {"mean_re_deg", a.mean_re_deg},
          {"mean_te_mm", a.mean_te_mm}, {"add10_pct", a.add10_pct}, {"avg_acc_pct", a.avg_acc_pct},
          {"dice", a.dice},             {"map_pct", a.map_pct}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

FrameResult score_frame(const std::string& frame_id, bool solved, const RigidPose& pose, const PartRecord& gt,
                        const SurfaceModel& model, const CameraIntrinsics& K) {
  FrameResult r;
  r.solved = solved;
  if (solved) {
    r.pose = pose;
  } else {
    r.pose.rotation = gt.pose.rotation * Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitX()).toRotationMatrix();
    r.pose.translation.setZero();
  }
  r.metrics = make_metric_row(frame_id, r.pose, gt.pose, model);
  if (solved) {
    r.dice = dice(render_silhouette(model, r.pose, K), gt.mask);
  } else {
    r.dice = count_nonzero(gt.mask) == 0 ? 1.0 : 0.0;
  }
  r.oks = frame_oks(r.pose, solved, gt, model, K);
  return r;
}

EvalAggregates aggregate(const std::vector<FrameResult>& rows) {
  EvalAggregates a;
  a.frames = static_cast<int>(rows.size());
  if (rows.empty()) return a;
  std::vector<double> oks_values;
  double acc = 0;
  for (const auto& r : rows) {
    a.solved += r.solved;
    a.mean_re_deg += r.metrics.re_deg;
    a.mean_te_mm += r.metrics.te_mm;
    a.add10_pct += r.metrics.add10_pass;
    a.dice += r.dice;
    double row_acc = 0;
    for (int v : r.metrics.accuracy) row_acc += v;
    acc += r.metrics.accuracy.empty() ? 0.0 : row_acc / static_cast<double>(r.metrics.accuracy.size());
    if (r.oks) oks_values.push_back(*r.oks);
  }
  const double n = static_cast<double>(rows.size());
  a.mean_re_deg /= n;
  a.mean_te_mm /= n;
  a.add10_pct *= 100.0 / n;
  a.avg_acc_pct = 100.0 * acc / n;
  a.dice /= n;
  a.map_pct = oks_values.empty() ? 0.0 : 100.0 * map_over_oks(oks_values);
  return a;
}

EvalReport evaluate_oracle(const BopDataset& data, const std::string& config_hash) {
  const auto it = data.models.find(kTargetObjId);
  if (it == data.models.end()) throw DataError("eval: dataset has no model for obj_id " + std::to_string(kTargetObjId));
  EvalReport r;
  for (const auto& f : data.frames) {
    const PartRecord& gt = f.record.part(kTargetObjId);
    FrameResult row = score_frame(frame_key(f.scene_id, f.frame_id), true, gt.pose, gt, it->second, f.record.intrinsics);
    r.rows.push_back(std::move(row));
  }
  r.aggregates = aggregate(r.rows);
  r.config_hash = config_hash;
  r.revision = build_revision();
  return r;
}

EvalReport evaluate_checkpoint(const fs::path& checkpoint, const BopDataset& data, std::vector<double>* timings_ms,
                               const InferSettings* infer) {
  const nn::Checkpoint ck = nn::load_checkpoint(checkpoint);
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::from_text(nn::block_text(ck.at("config")));
  } catch (const ConfigError& e) {
    throw DataError(std::string("eval: checkpoint carries an invalid config: ") + e.what());
  }
  if (cfg.hash() != ck.config_hash) throw nn::CheckpointCorrupted("eval: checkpoint config does not match its hash");
  if (infer) cfg.infer = *infer;
  if (cfg.train.precision == Precision::kFloat32) return evaluate_network<float>(cfg, ck, data, timings_ms);
  return evaluate_network<double>(cfg, ck, data, timings_ms);
}

void write_report(const EvalReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "report.csv");
  if (!csv) throw DataError("eval: cannot write " + (dir / "report.csv").string());
  csv << "frame_id,solved,r00,r01,r02,r10,r11,r12,r20,r21,r22,t0,t1,t2,inliers,mean_reproj_px,re_deg,te_mm,add_mm,add10_pass,dice,oks";
  for (double tau : avg_accuracy_thresholds()) csv << ",acc_" << fmt(tau);
  csv << '\n';
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.rows) {
    const auto& m = r.metrics;
    csv << m.frame_id << ',' << r.solved;
    for (int i = 0; i < 9; ++i) csv << ',' << fmt(r.pose.rotation(i / 3, i % 3));
    for (int i = 0; i < 3; ++i) csv << ',' << fmt(r.pose.translation[i]);
    csv << ',' << r.inliers << ',' << fmt(r.mean_reprojection_px) << ',' << fmt(m.re_deg) << ',' << fmt(m.te_mm) << ','
        << fmt(m.add_mm) << ',' << m.add10_pass << ',' << fmt(r.dice) << ',' << (r.oks ? fmt(*r.oks) : "");
    for (int a : m.accuracy) csv << ',' << a;
    csv << '\n';
    rows.push_back({{"frame_id", m.frame_id},
                    {"solved", r.solved},
                    {"pose", pose_json(r.pose)},
                    {"inliers", r.inliers},
                    {"mean_reproj_px", r.mean_reprojection_px},
                    {"re_deg", m.re_deg},
                    {"te_mm", m.te_mm},
                    {"add_mm", m.add_mm},
                    {"add10_pass", m.add10_pass},
                    {"accuracy", m.accuracy},
                    {"dice", r.dice},
                    {"oks", r.oks ? ordered_json(*r.oks) : ordered_json(nullptr)}});
  }
  ordered_json j = {{"config_hash", report.config_hash},
                    {"revision", report.revision},
                    {"unsolved_sentinel", "pose = (R_gt * Rx(180 deg), t = 0); dice = 0; oks = 0"},
                    {"aggregates", aggregates_json(report.aggregates)},
                    {"rows", rows}};
  std::ofstream js(dir / "report.json");
  if (!js) throw DataError("eval: cannot write " + (dir / "report.json").string());
  js << j.dump(1) << '\n';
}

EvalReport load_report(const fs::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw DataError("load_report: cannot read " + json_path.string());
  EvalReport r;
  EvalAggregates stored;
  try {
    const auto j = nlohmann::json::parse(in);
    r.config_hash = j.at("config_hash").get<std::string>();
    r.revision = j.at("revision").get<std::string>();
    for (const auto& row : j.at("rows")) {
      FrameResult f;
      f.metrics.frame_id = row.at("frame_id").get<std::string>();
      f.solved = row.at("solved").get<bool>();
      const auto& R = row.at("pose").at("R");
      const auto& t = row.at("pose").at("t");
      for (int i = 0; i < 9; ++i) f.pose.rotation(i / 3, i % 3) = R.at(i).get<double>();
      for (int i = 0; i < 3; ++i) f.pose.translation[i] = t.at(i).get<double>();
      f.inliers = row.at("inliers").get<int>();
      f.mean_reprojection_px = row.at("mean_reproj_px").get<double>();
      f.metrics.re_deg = row.at("re_deg").get<double>();
      f.metrics.te_mm = row.at("te_mm").get<double>();
      f.metrics.add_mm = row.at("add_mm").get<double>();
      f.metrics.add10_pass = row.at("add10_pass").get<bool>();
      f.metrics.accuracy = row.at("accuracy").get<std::vector<int>>();
      f.dice = row.at("dice").get<double>();
      if (!row.at("oks").is_null()) f.oks = row.at("oks").get<double>();
      r.rows.push_back(std::move(f));
    }
    const auto& a = j.at("aggregates");
    stored = {a.at("frames").get<int>(),        a.at("solved").get<int>(),     a.at("mean_re_deg").get<double>(),
              a.at("mean_te_mm").get<double>(), a.at("add10_pct").get<double>(), a.at("avg_acc_pct").get<double>(),
              a.at("dice").get<double>(),       a.at("map_pct").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_report: malformed " + json_path.string() + ": " + e.what());
  }
  r.aggregates = aggregate(r.rows);
  const auto& c = r.aggregates;
  const auto near = [](double x, double y) { return std::abs(x - y) <= 1e-9; };
  if (c.frames != stored.frames || c.solved != stored.solved || !near(c.mean_re_deg, stored.mean_re_deg) ||
      !near(c.mean_te_mm, stored.mean_te_mm) || !near(c.add10_pct, stored.add10_pct) ||
      !near(c.avg_acc_pct, stored.avg_acc_pct) || !near(c.dice, stored.dice) || !near(c.map_pct, stored.map_pct)) {
    throw DataError("load_report: aggregates in " + json_path.string() + " do not match its rows");
  }
  return r;
}

void cmd_eval(const fs::path& checkpoint, const fs::path& data, const fs::path& out, bool oracle) {
  const BopDataset ds = read_bop(data);
  std::vector<double> timings;
  EvalReport report;
  if (oracle) {
    report = evaluate_oracle(ds, "oracle");
  } else {
    fs::path ck = checkpoint;
    if (fs::is_directory(ck)) ck /= "final.dcpk";
    if (!fs::exists(ck)) throw DataError("eval: no checkpoint at " + ck.string());
    report = evaluate_checkpoint(ck, ds, &timings);
  }
  write_report(report, out);
  if (!timings.empty()) {
    std::ofstream t(out / "timing.csv");
    t << "frame_id,wall_ms\n";
    for (std::size_t i = 0; i < timings.size(); ++i) t << report.rows[i].metrics.frame_id << ',' << timings[i] << '\n';
  }
}

}  // namespace dcpose
