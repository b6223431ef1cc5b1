#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcpose/geometry/image.hpp"
#include "dcpose/geometry/mesh.hpp"
#include "dcpose/geometry/pose.hpp"

namespace dcpose {

struct Keypoint2D {
  double x = 0;
  double y = 0;
  bool visible = true;
};

using PosePair = std::pair<RigidPose, RigidPose>;  // (pred, gt)

/// Geodesic rotation distance in degrees, in [0, 180].
double rotation_error(const RigidPose& pred, const RigidPose& gt);

/// Translation distance in mm.
double translation_error(const RigidPose& pred, const RigidPose& gt);

/// Mean distance between model vertices transformed by both poses (mm).
double add_metric(const RigidPose& pred, const RigidPose& gt, const SurfaceModel& model);

/// Fraction of samples with ADD strictly below 10% of the model diameter.
double add10_accuracy(std::span<const PosePair> samples, const SurfaceModel& model);
double add10_accuracy_from_add(std::span<const double> add_values, double diameter);

/// ADD thresholds of the 0-5 mm accuracy curve: 0.1, 0.2, ..., 5.0 mm.
std::vector<double> avg_accuracy_thresholds();

/// Mean over the threshold grid of the fraction of samples with ADD < tau, in percent.
double avg_accuracy_0_5mm(std::span<const PosePair> samples, const SurfaceModel& model);
double avg_accuracy_0_5mm_from_add(std::span<const double> add_values);

/// COCO-style object keypoint similarity over visible ground-truth keypoints.
/// Throws InvalidArgument when no gt keypoint is visible.
double oks(std::span<const Keypoint2D> pred, std::span<const Keypoint2D> gt, double scale, double sigma);

/// OKS thresholds 0.50, 0.55, ..., 0.95.
std::vector<double> oks_thresholds();

/// Mean over the OKS thresholds of the fraction of frames with OKS >= threshold.
double map_over_oks(std::span<const double> frame_oks);

/// 2|A and B| / (|A| + |B|); 1 when both masks are empty.
double dice(const Mask& pred, const Mask& gt);

/// One per-frame metric row: frame_id, re_deg, te_mm, add_mm, add10_pass, accuracy per threshold.
struct MetricRow {
  std::string frame_id;
  double re_deg = 0;
  double te_mm = 0;
  double add_mm = 0;
  bool add10_pass = false;
  std::vector<int> accuracy;  // 1 if add_mm < tau for each avg_accuracy_thresholds() entry
};

MetricRow make_metric_row(std::string frame_id, const RigidPose& pred, const RigidPose& gt,
                          const SurfaceModel& model);

void write_metric_csv_header(std::ostream& out);
void write_metric_csv_row(std::ostream& out, const MetricRow& row);

}  // namespace dcpose
