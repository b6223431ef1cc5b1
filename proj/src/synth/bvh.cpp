#include "dcpose/synth/bvh.hpp"

#include <algorithm>
#include <cmath>

#include "dcpose/errors.hpp"

namespace dcpose {

Aabb Aabb::transformed(const RigidPose& pose) const {
  Aabb out;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d corner((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                                 (i & 4) ? hi.z() : lo.z());
    out.expand(pose.apply(corner));
  }
  return out;
}

std::optional<double> Aabb::ray_entry(const Eigen::Vector3d& origin, const Eigen::Vector3d& inv_dir,
                                      double t_max) const {
  double t0 = 0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    double ta = (lo[a] - origin[a]) * inv_dir[a];
    double tb = (hi[a] - origin[a]) * inv_dir[a];
    if (std::isnan(ta) || std::isnan(tb)) {
      // ray parallel to the slab and on its boundary
      if (origin[a] < lo[a] || origin[a] > hi[a]) return std::nullopt;
      continue;
    }
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

Bvh::Bvh(std::vector<Eigen::Vector3d> vertices, std::vector<Triangle> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  if (triangles_.empty()) throw InvalidArgument("Bvh: no triangles");
  std::vector<Eigen::Vector3d> centroids;
  centroids.reserve(triangles_.size());
  for (const auto& t : triangles_) {
    centroids.push_back((vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0);
  }
  order_.resize(triangles_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
  nodes_.reserve(2 * triangles_.size() / kMaxLeafSize + 2);
  build(0, static_cast<int>(triangles_.size()), centroids);
}

int Bvh::build(int first, int count, std::vector<Eigen::Vector3d>& centroids) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Aabb box, cbox;
  for (int i = first; i < first + count; ++i) {
    const auto& t = triangles_[order_[i]];
    for (int k = 0; k < 3; ++k) box.expand(vertices_[t[k]]);
    cbox.expand(centroids[order_[i]]);
  }
  nodes_[index].box = box;
  if (count <= kMaxLeafSize) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  int axis = 0;
  (cbox.hi - cbox.lo).maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) {
                     if (centroids[a][axis] != centroids[b][axis]) return centroids[a][axis] < centroids[b][axis];
                     return a < b;
                   });
  const int left = build(first, mid - first, centroids);
  const int right = build(mid, first + count - mid, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

std::optional<double> ray_triangle(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                   const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                                   const Eigen::Vector3d& c) {
  const Eigen::Vector3d e1 = b - a, e2 = c - a;
  const Eigen::Vector3d p = dir.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = origin - a;
  const double u = s.dot(p) * inv;
  if (u < 0 || u > 1) return std::nullopt;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = dir.dot(q) * inv;
  if (v < 0 || u + v > 1) return std::nullopt;
  const double t = e2.dot(q) * inv;
  if (t < 0) return std::nullopt;
  return t;
}

std::optional<double> Bvh::ray_hit(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const {
  const Eigen::Vector3d inv_dir = dir.cwiseInverse();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const BvhNode& node = nodes_[stack.back()];
    stack.pop_back();
    if (!node.box.ray_entry(origin, inv_dir, best)) continue;
    if (node.is_leaf()) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const auto& t = triangles_[order_[i]];
        if (auto hit = ray_triangle(origin, dir, vertices_[t[0]], vertices_[t[1]], vertices_[t[2]])) {
          best = std::min(best, *hit);
        }
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

}  // namespace dcpose
