#pragma once

#include <span>
#include <utility>

#include "dcpose/synth/bvh.hpp"

namespace dcpose {

/// Triangle/triangle intersection (Möller's interval-overlap test, with a
/// 2D fallback for coplanar pairs). Touching counts as intersecting.
bool triangles_intersect(const Eigen::Vector3d& a0, const Eigen::Vector3d& a1, const Eigen::Vector3d& a2,
                         const Eigen::Vector3d& b0, const Eigen::Vector3d& b1, const Eigen::Vector3d& b2);

/// True iff any triangle of `a` placed at `pose_a` intersects any triangle of `b` at `pose_b`.
bool bvh_intersect(const Bvh& a, const RigidPose& pose_a, const Bvh& b, const RigidPose& pose_b);

/// Copy of the mesh with every vertex moved `distance` mm against its area-weighted normal.
SurfaceModel erode(const SurfaceModel& model, double distance);

/// Per-mesh collision data: the hierarchy over the mesh and over a copy eroded by
/// half the joint clearance (used between articulated neighbours).
struct CollisionBody {
  static constexpr double kJointClearance = 0.1;  // mm

  explicit CollisionBody(const SurfaceModel& model, double clearance = kJointClearance);

  Bvh full;
  Bvh eroded;
};

struct PlacedBody {
  const CollisionBody* body = nullptr;
  RigidPose pose;
};

/// True iff any part touches the backdrop (camera frame) or two distinct parts
/// intersect. Pairs listed in `adjacent` share a joint and are tested on their
/// eroded meshes, i.e. overlaps within the joint clearance are tolerated.
bool detect_collision(std::span<const PlacedBody> parts, const Bvh& backdrop,
                      std::span<const std::pair<int, int>> adjacent);

}  // namespace dcpose
