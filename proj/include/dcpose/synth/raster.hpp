#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcpose/geometry/image.hpp"
#include "dcpose/geometry/mesh.hpp"
#include "dcpose/geometry/pose.hpp"

namespace dcpose {

struct LightSpec {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // camera frame, mm
  double intensity = 1.0;
  Eigen::Vector3d color = Eigen::Vector3d::Ones();
};

/// A mesh placed in the camera frame together with its material.
struct RenderPart {
  const SurfaceModel* model = nullptr;
  RigidPose pose;
  int obj_id = 0;  // 0 marks scenery (no mask, no coordinates)
  Eigen::Vector3d albedo{0.6, 0.6, 0.62};
  double specular = 0.5;
  double shininess = 32.0;
  /// Optional per-vertex albedo, overrides `albedo` when non-empty.
  std::vector<Eigen::Vector3d> vertex_albedo;
};

struct RenderOptions {
  double near_plane = 1.0;  // mm
  double ambient = 0.12;
  double falloff_distance = 120.0;  // mm; irradiance scales with 1 / (1 + (r / falloff)^2)
};

struct PartRecord {
  int obj_id = 0;
  RigidPose pose;
  Mask mask;        // unoccluded silhouette
  Mask mask_visib;  // visible pixels
  std::size_t px_count_all = 0;
  std::size_t px_count_visib = 0;

  double visibility() const {
    return px_count_all == 0 ? 0.0 : static_cast<double>(px_count_visib) / static_cast<double>(px_count_all);
  }
};

/// One rendered observation. Pixel (x, y) samples the ray through the pixel
/// center, which projects to integer coordinates (x, y).
struct FrameRecord {
  Image<std::uint8_t> rgb;   // 3 channels
  Image<float> depth;        // mm along the optical axis, 0 where nothing was hit
  Image<float> normal_map;   // 3 channels, unit camera-frame normals facing the camera
  Image<float> coord_map;    // 3 channels, normalized object coordinate of the visible part
  Image<std::uint8_t> label; // obj_id of the visible part, 0 for scenery / empty
  std::vector<PartRecord> parts;
  CameraIntrinsics intrinsics;

  const PartRecord& part(int obj_id) const;
};

/// z-buffered perspective rasterization with Lambertian + Blinn-Phong shading.
/// Geometry channels never depend on the light. Throws InvalidArgument when no
/// instrument part covers any pixel.
FrameRecord render_frame(std::span<const RenderPart> parts, const RenderPart& backdrop, const LightSpec& light,
                         const CameraIntrinsics& K, const RenderOptions& options = {});

/// Pixels covered by the mesh ignoring every occluder.
Mask render_silhouette(const SurfaceModel& model, const RigidPose& pose, const CameraIntrinsics& K,
                       double near_plane = 1.0);

/// Visible mask area divided by the unoccluded silhouette area of `obj_id`.
double visibility_ratio(const FrameRecord& frame, int obj_id);

}  // namespace dcpose
