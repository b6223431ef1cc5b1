#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "dcpose/geometry/mesh.hpp"
#include "dcpose/geometry/pose.hpp"

namespace dcpose {

/// Maps a crop pixel (u, v) to the image pixel (x0 + scale * u, y0 + scale * v).
struct CropWindow {
  double x0 = 0;
  double y0 = 0;
  double scale = 1;

  Eigen::Vector2d to_image(double u, double v) const { return {x0 + scale * u, y0 + scale * v}; }
  Eigen::Vector2d to_crop(const Eigen::Vector2d& p) const { return {(p.x() - x0) / scale, (p.y() - y0) / scale}; }
};

struct Correspondence {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();  // full-image coordinates
  Eigen::Vector3d point = Eigen::Vector3d::Zero();  // object frame, mm
  double score = 1.0;
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;
  CameraIntrinsics intrinsics;
  CropWindow crop;
};

/// Surface points (object frame, mm) and their unit embeddings, one row each.
struct KeyBank {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normalized_points;
  Eigen::MatrixXd embeddings;  // K x E
};

/// K area-uniform surface samples; embeddings are left for the caller to fill.
KeyBank sample_key_bank(const SurfaceModel& model, int count, std::uint64_t seed);

/// Per-pixel network output on a crop. Row p = y * width + x.
struct DenseEmbeddingMap {
  int width = 0;
  int height = 0;
  Eigen::MatrixXd embeddings;      // (width * height) x E, unit rows
  std::vector<double> mask_probs;  // width * height
};

struct CorrespondenceOptions {
  int samples = 512;
  /// Logits are <E_u, E_k> times this factor before the softmax over the bank.
  double inverse_temperature = 50.0;
};

/// Pixels are drawn with probability proportional to the mask probability; each
/// draws a bank point from the softmax over its dot products with the bank.
/// Pair score = mask_prob * softmax_prob.
CorrespondenceSet build_correspondences(const DenseEmbeddingMap& map, const KeyBank& bank, const CropWindow& crop,
                                        const CameraIntrinsics& K, const CorrespondenceOptions& opts,
                                        std::uint64_t seed);

/// Reprojection error in pixels; infinity when the point is behind the camera.
double reprojection_error(const RigidPose& pose, const Correspondence& c, const CameraIntrinsics& K);

}  // namespace dcpose
