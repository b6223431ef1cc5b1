#include "dcpose/synth/collision.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dcpose {
namespace {

constexpr double kPlaneEps = 1e-10;  // mm

double orient2d(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

bool on_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect_2d(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2, const Eigen::Vector2d& q1,
                           const Eigen::Vector2d& q2) {
  const double d1 = orient2d(q1, q2, p1), d2 = orient2d(q1, q2, p2);
  const double d3 = orient2d(p1, p2, q1), d4 = orient2d(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

bool point_in_triangle_2d(const Eigen::Vector2d& p, const std::array<Eigen::Vector2d, 3>& t) {
  const double a = orient2d(t[0], t[1], p), b = orient2d(t[1], t[2], p), c = orient2d(t[2], t[0], p);
  return (a >= 0 && b >= 0 && c >= 0) || (a <= 0 && b <= 0 && c <= 0);
}

bool coplanar_intersect(const Eigen::Vector3d& n, const std::array<Eigen::Vector3d, 3>& a,
                        const std::array<Eigen::Vector3d, 3>& b) {
  int drop = 0;
  n.cwiseAbs().maxCoeff(&drop);
  const int i0 = drop == 0 ? 1 : 0;
  const int i1 = drop == 2 ? 1 : 2;
  std::array<Eigen::Vector2d, 3> pa, pb;
  for (int k = 0; k < 3; ++k) {
    pa[k] = {a[k][i0], a[k][i1]};
    pb[k] = {b[k][i0], b[k][i1]};
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (segments_intersect_2d(pa[i], pa[(i + 1) % 3], pb[j], pb[(j + 1) % 3])) return true;
    }
  }
  return point_in_triangle_2d(pa[0], pb) || point_in_triangle_2d(pb[0], pa);
}

// Interval of the triangle on the intersection line, from vertex projections p and
// signed plane distances d. Returns false when all distances vanish (coplanar).
bool line_interval(const double p[3], const double d[3], double& lo, double& hi) {
  auto alone = [&](int k, int i, int j) {
    const double t1 = p[k] + (p[i] - p[k]) * d[k] / (d[k] - d[i]);
    const double t2 = p[k] + (p[j] - p[k]) * d[k] / (d[k] - d[j]);
    lo = std::min(t1, t2);
    hi = std::max(t1, t2);
  };
  if (d[0] * d[1] > 0) {
    alone(2, 0, 1);
  } else if (d[0] * d[2] > 0) {
    alone(1, 0, 2);
  } else if (d[1] * d[2] > 0 || d[0] != 0) {
    alone(0, 1, 2);
  } else if (d[1] != 0) {
    alone(1, 0, 2);
  } else if (d[2] != 0) {
    alone(2, 0, 1);
  } else {
    return false;
  }
  return true;
}

bool leaf_pair_intersect(const Bvh& a, const BvhNode& na, const std::vector<Eigen::Vector3d>& va,
                         const Bvh& b, const BvhNode& nb, const std::vector<Eigen::Vector3d>& vb) {
  for (int i = na.first; i < na.first + na.count; ++i) {
    const auto& ta = a.triangles()[a.triangle_order()[i]];
    Aabb box_a;
    for (int k = 0; k < 3; ++k) box_a.expand(va[ta[k]]);
    for (int j = nb.first; j < nb.first + nb.count; ++j) {
      const auto& tb = b.triangles()[b.triangle_order()[j]];
      Aabb box_b;
      for (int k = 0; k < 3; ++k) box_b.expand(vb[tb[k]]);
      if (!box_a.overlaps(box_b)) continue;
      if (triangles_intersect(va[ta[0]], va[ta[1]], va[ta[2]], vb[tb[0]], vb[tb[1]], vb[tb[2]])) return true;
    }
  }
  return false;
}

}  // namespace

bool triangles_intersect(const Eigen::Vector3d& a0, const Eigen::Vector3d& a1, const Eigen::Vector3d& a2,
                         const Eigen::Vector3d& b0, const Eigen::Vector3d& b1, const Eigen::Vector3d& b2) {
  const std::array<Eigen::Vector3d, 3> a{a0, a1, a2};
  const std::array<Eigen::Vector3d, 3> b{b0, b1, b2};

  Eigen::Vector3d nb = (b1 - b0).cross(b2 - b0);
  const double nb_len = nb.norm();
  Eigen::Vector3d na = (a1 - a0).cross(a2 - a0);
  const double na_len = na.norm();
  if (nb_len == 0 || na_len == 0) return false;  // degenerate triangles have no area to collide
  nb /= nb_len;
  na /= na_len;

  double da[3], db[3];
  for (int k = 0; k < 3; ++k) {
    da[k] = nb.dot(a[k] - b0);
    if (std::abs(da[k]) < kPlaneEps) da[k] = 0;
  }
  if ((da[0] > 0 && da[1] > 0 && da[2] > 0) || (da[0] < 0 && da[1] < 0 && da[2] < 0)) return false;
  for (int k = 0; k < 3; ++k) {
    db[k] = na.dot(b[k] - a0);
    if (std::abs(db[k]) < kPlaneEps) db[k] = 0;
  }
  if ((db[0] > 0 && db[1] > 0 && db[2] > 0) || (db[0] < 0 && db[1] < 0 && db[2] < 0)) return false;

  const Eigen::Vector3d dir = na.cross(nb);
  int axis = 0;
  dir.cwiseAbs().maxCoeff(&axis);
  const double pa[3] = {a0[axis], a1[axis], a2[axis]};
  const double pb[3] = {b0[axis], b1[axis], b2[axis]};

  double a_lo, a_hi, b_lo, b_hi;
  if (!line_interval(pa, da, a_lo, a_hi)) return coplanar_intersect(nb, a, b);
  if (!line_interval(pb, db, b_lo, b_hi)) return coplanar_intersect(na, a, b);
  return std::max(a_lo, b_lo) <= std::min(a_hi, b_hi);
}

bool bvh_intersect(const Bvh& a, const RigidPose& pose_a, const Bvh& b, const RigidPose& pose_b) {
  std::vector<Aabb> boxes_a, boxes_b;
  boxes_a.reserve(a.nodes().size());
  boxes_b.reserve(b.nodes().size());
  for (const auto& n : a.nodes()) boxes_a.push_back(n.box.transformed(pose_a));
  for (const auto& n : b.nodes()) boxes_b.push_back(n.box.transformed(pose_b));
  if (!boxes_a[0].overlaps(boxes_b[0])) return false;

  std::vector<Eigen::Vector3d> va, vb;
  va.reserve(a.vertices().size());
  vb.reserve(b.vertices().size());
  for (const auto& v : a.vertices()) va.push_back(pose_a.apply(v));
  for (const auto& v : b.vertices()) vb.push_back(pose_b.apply(v));

  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [ia, ib] = stack.back();
    stack.pop_back();
    if (!boxes_a[ia].overlaps(boxes_b[ib])) continue;
    const BvhNode& na = a.nodes()[ia];
    const BvhNode& nb = b.nodes()[ib];
    if (na.is_leaf() && nb.is_leaf()) {
      if (leaf_pair_intersect(a, na, va, b, nb, vb)) return true;
      continue;
    }
    const auto extent = [](const Aabb& box) { return (box.hi - box.lo).squaredNorm(); };
    const bool split_a = nb.is_leaf() || (!na.is_leaf() && extent(boxes_a[ia]) >= extent(boxes_b[ib]));
    if (split_a) {
      stack.emplace_back(na.left, ib);
      stack.emplace_back(na.right, ib);
    } else {
      stack.emplace_back(ia, nb.left);
      stack.emplace_back(ia, nb.right);
    }
  }
  return false;
}

SurfaceModel erode(const SurfaceModel& model, double distance) {
  std::vector<Eigen::Vector3d> normals(model.vertices.size(), Eigen::Vector3d::Zero());
  for (const auto& t : model.triangles) {
    // unnormalized cross product is area-weighted
    const Eigen::Vector3d n =
        (model.vertices[t[1]] - model.vertices[t[0]]).cross(model.vertices[t[2]] - model.vertices[t[0]]);
    for (int k = 0; k < 3; ++k) normals[t[k]] += n;
  }
  std::vector<Eigen::Vector3d> verts = model.vertices;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const double len = normals[i].norm();
    if (len > 0) verts[i] -= normals[i] / len * distance;
  }
  return make_surface_model(std::move(verts), model.triangles, model.keypoints);
}

CollisionBody::CollisionBody(const SurfaceModel& model, double clearance)
    : full(model), eroded(erode(model, 0.5 * clearance)) {}

bool detect_collision(std::span<const PlacedBody> parts, const Bvh& backdrop,
                      std::span<const std::pair<int, int>> adjacent) {
  const auto is_adjacent = [&](int i, int j) {
    return std::any_of(adjacent.begin(), adjacent.end(), [&](const auto& p) {
      return (p.first == i && p.second == j) || (p.first == j && p.second == i);
    });
  };
  const RigidPose identity;
  for (const auto& part : parts) {
    if (bvh_intersect(part.body->full, part.pose, backdrop, identity)) return true;
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      const bool adj = is_adjacent(static_cast<int>(i), static_cast<int>(j));
      const Bvh& a = adj ? parts[i].body->eroded : parts[i].body->full;
      const Bvh& b = adj ? parts[j].body->eroded : parts[j].body->full;
      if (bvh_intersect(a, parts[i].pose, b, parts[j].pose)) return true;
    }
  }
  return false;
}

}  // namespace dcpose
