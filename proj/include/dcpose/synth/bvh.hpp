#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <vector>

#include "dcpose/geometry/mesh.hpp"
#include "dcpose/geometry/pose.hpp"

namespace dcpose {

struct Aabb {
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity());

  void expand(const Eigen::Vector3d& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool overlaps(const Aabb& b) const {
    return (lo.array() <= b.hi.array()).all() && (b.lo.array() <= hi.array()).all();
  }
  bool contains(const Aabb& b) const {
    return (lo.array() <= b.lo.array()).all() && (b.hi.array() <= hi.array()).all();
  }
  /// Box enclosing this box after a rigid transform.
  Aabb transformed(const RigidPose& pose) const;
  /// Slab test; returns the entry distance when the ray hits within [0, t_max].
  std::optional<double> ray_entry(const Eigen::Vector3d& origin, const Eigen::Vector3d& inv_dir,
                                  double t_max) const;
};

struct BvhNode {
  Aabb box;
  int left = -1;   // child node indices, -1 for leaves
  int right = -1;
  int first = 0;   // range into Bvh::triangle_order() for leaves
  int count = 0;

  bool is_leaf() const { return left < 0; }
};

/// Immutable bounding volume hierarchy over a triangle mesh, in the mesh's own frame.
/// Median split along the longest centroid axis; leaves hold at most kMaxLeafSize triangles.
class Bvh {
 public:
  static constexpr int kMaxLeafSize = 8;

  Bvh(std::vector<Eigen::Vector3d> vertices, std::vector<Triangle> triangles);
  explicit Bvh(const SurfaceModel& model) : Bvh(model.vertices, model.triangles) {}

  const std::vector<BvhNode>& nodes() const { return nodes_; }
  const std::vector<int>& triangle_order() const { return order_; }
  const std::vector<Eigen::Vector3d>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }

  /// Closest ray hit distance (ray parameter, dir need not be unit).
  std::optional<double> ray_hit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const;

 private:
  int build(int first, int count, std::vector<Eigen::Vector3d>& centroids);

  std::vector<Eigen::Vector3d> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<int> order_;
  std::vector<BvhNode> nodes_;
};

/// Möller-Trumbore ray/triangle test, returns the ray parameter of the hit.
std::optional<double> ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                   const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                   const Eigen::Vector3d& c);

}  // namespace dcpose
