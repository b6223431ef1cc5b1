#include "dcpose/geometry/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "dcpose/errors.hpp"

namespace dcpose {

double rotation_error(const RigidPose& pred, const RigidPose& gt) {
  const double c = ((gt.rotation.transpose() * pred.rotation).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

double translation_error(const RigidPose& pred, const RigidPose& gt) {
  return (pred.translation - gt.translation).norm();
}

double add_metric(const RigidPose& pred, const RigidPose& gt, const SurfaceModel& model) {
  if (model.vertices.empty()) throw InvalidArgument("add_metric: empty model");
  double sum = 0;
  for (const auto& v : model.vertices) sum += (gt.apply(v) - pred.apply(v)).norm();
  return sum / static_cast<double>(model.vertices.size());
}

double add10_accuracy_from_add(std::span<const double> add_values, double diameter) {
  if (add_values.empty()) throw InvalidArgument("add10_accuracy: no samples");
  const double thr = 0.1 * diameter;
  std::size_t pass = 0;
  for (double a : add_values) pass += a < thr;
  return static_cast<double>(pass) / static_cast<double>(add_values.size());
}

double add10_accuracy(std::span<const PosePair> samples, const SurfaceModel& model) {
  std::vector<double> adds;
  adds.reserve(samples.size());
  for (const auto& [pred, gt] : samples) adds.push_back(add_metric(pred, gt, model));
  return add10_accuracy_from_add(adds, model.diameter);
}

std::vector<double> avg_accuracy_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 50; ++k) t.push_back(k / 10.0);
  return t;
}

double avg_accuracy_0_5mm_from_add(std::span<const double> add_values) {
  if (add_values.empty()) throw InvalidArgument("avg_accuracy_0_5mm: no samples");
  const auto taus = avg_accuracy_thresholds();
  double acc = 0;
  for (double tau : taus) {
    std::size_t pass = 0;
    for (double a : add_values) pass += a < tau;
    acc += static_cast<double>(pass) / static_cast<double>(add_values.size());
  }
  return 100.0 * acc / static_cast<double>(taus.size());
}

double avg_accuracy_0_5mm(std::span<const PosePair> samples, const SurfaceModel& model) {
  std::vector<double> adds;
  adds.reserve(samples.size());
  for (const auto& [pred, gt] : samples) adds.push_back(add_metric(pred, gt, model));
  return avg_accuracy_0_5mm_from_add(adds);
}

double oks(std::span<const Keypoint2D> pred, std::span<const Keypoint2D> gt, double scale, double sigma) {
  if (pred.size() != gt.size()) throw InvalidArgument("oks: keypoint lists differ in length");
  if (!(scale > 0)) throw InvalidArgument("oks: scale must be positive");
  const double denom = 2.0 * scale * scale * sigma * sigma;
  double sum = 0;
  int visible = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt[i].visible) continue;
    const double dx = pred[i].x - gt[i].x;
    const double dy = pred[i].y - gt[i].y;
    sum += std::exp(-(dx * dx + dy * dy) / denom);
    ++visible;
  }
  if (visible == 0) throw InvalidArgument("oks: no visible ground-truth keypoint");
  return sum / visible;
}

std::vector<double> oks_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

double map_over_oks(std::span<const double> frame_oks) {
  if (frame_oks.empty()) throw InvalidArgument("map_over_oks: no frames");
  const auto thresholds = oks_thresholds();
  double acc = 0;
  for (double thr : thresholds) {
    std::size_t pass = 0;
    for (double o : frame_oks) pass += o >= thr;
    acc += static_cast<double>(pass) / static_cast<double>(frame_oks.size());
  }
  return acc / static_cast<double>(thresholds.size());
}

double dice(const Mask& pred, const Mask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw InvalidArgument("dice: mask dimensions differ");
  }
  std::size_t a = 0, b = 0, both = 0;
  const auto pa = pred.data();
  const auto pb = gt.data();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const bool x = pa[i] != 0, y = pb[i] != 0;
    a += x;
    b += y;
    both += x && y;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

MetricRow make_metric_row(std::string frame_id, const RigidPose& pred, const RigidPose& gt,
                          const SurfaceModel& model) {
  MetricRow row;
  row.frame_id = std::move(frame_id);
  row.re_deg = rotation_error(pred, gt);
  row.te_mm = translation_error(pred, gt);
  row.add_mm = add_metric(pred, gt, model);
  row.add10_pass = row.add_mm < 0.1 * model.diameter;
  for (double tau : avg_accuracy_thresholds()) row.accuracy.push_back(row.add_mm < tau ? 1 : 0);
  return row;
}

void write_metric_csv_header(std::ostream& out) {
  out << "frame_id,re_deg,te_mm,add_mm,add10_pass";
  for (double tau : avg_accuracy_thresholds()) out << ",acc_" << tau;
  out << '\n';
}

void write_metric_csv_row(std::ostream& out, const MetricRow& row) {
  const auto old = out.precision(17);
  out << row.frame_id << ',' << row.re_deg << ',' << row.te_mm << ',' << row.add_mm << ','
      << (row.add10_pass ? 1 : 0);
  for (int a : row.accuracy) out << ',' << a;
  out << '\n';
  out.precision(old);
}

}  // namespace dcpose
