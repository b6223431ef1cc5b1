#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcpose/geometry/metrics.hpp"
#include "dcpose/harness/config.hpp"
#include "dcpose/synth/bop.hpp"

namespace dcpose {

/// One evaluated frame. Unsolved frames carry the sentinel pose (R_gt * Rx(180 deg), t = 0),
/// so RE is 180, TE is |t_gt| and every accuracy test fails; their Dice and OKS are 0.
struct FrameResult {
  MetricRow metrics;
  bool solved = false;
  RigidPose pose;
  int inliers = 0;
  double mean_reprojection_px = 0;
  double dice = 0;
  std::optional<double> oks;  // empty when no ground-truth keypoint is inside the image
};

struct EvalAggregates {
  int frames = 0;
  int solved = 0;
  double mean_re_deg = 0;
  double mean_te_mm = 0;
  double add10_pct = 0;
  double avg_acc_pct = 0;
  double dice = 0;
  double map_pct = 0;  // over frames with a defined OKS
};

struct EvalReport {
  std::vector<FrameResult> rows;
  EvalAggregates aggregates;
  std::string config_hash;
  std::string revision;
};

/// Pure function of the rows.
EvalAggregates aggregate(const std::vector<FrameResult>& rows);

/// Metrics of one frame. `pose` is ignored when `solved` is false.
FrameResult score_frame(const std::string& frame_id, bool solved, const RigidPose& pose, const PartRecord& gt,
                        const SurfaceModel& model, const CameraIntrinsics& K);

/// Injects the ground-truth poses.
EvalReport evaluate_oracle(const BopDataset& data, const std::string& config_hash);

/// Full inference: GT-box crop, encoder, key bank, correspondences, RANSAC-PnP with refinement.
/// `timings_ms`, when given, receives the wall time of every frame.
/// `infer`, when given, replaces the inference settings stored in the checkpoint.
EvalReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const BopDataset& data,
                               std::vector<double>* timings_ms = nullptr, const InferSettings* infer = nullptr);

/// report.csv and report.json; both are deterministic.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

/// Reads report.json and rechecks the aggregates against the rows (1e-9); throws DataError on mismatch.
EvalReport load_report(const std::filesystem::path& json_path);

/// Accepts a checkpoint file or a training directory (uses final.dcpk). Writes timing.csv next to the report.
void cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
              const std::filesystem::path& out, bool oracle = false);

std::string frame_key(int scene_id, int frame_id);

}  // namespace dcpose
