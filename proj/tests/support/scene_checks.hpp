#pragma once

// Brute-force checks on sampled instrument configurations, shared by unit and acceptance tests.

#include <array>
#include <cmath>

#include "dcpose/synth/collision.hpp"
#include "dcpose/synth/instrument.hpp"
#include "support/oracles.hpp"

namespace oracle {

struct WorldMesh {
  std::vector<std::array<Eigen::Vector3d, 3>> tris;
  std::vector<dcpose::Aabb> boxes;
};

inline WorldMesh place(const std::vector<Eigen::Vector3d>& verts, const std::vector<dcpose::Triangle>& tris,
                       const dcpose::RigidPose& pose) {
  WorldMesh w;
  for (const auto& t : tris) {
    std::array<Eigen::Vector3d, 3> p{pose.apply(verts[t[0]]), pose.apply(verts[t[1]]), pose.apply(verts[t[2]])};
    dcpose::Aabb b;
    for (const auto& v : p) b.expand(v);
    w.tris.push_back(p);
    w.boxes.push_back(b);
  }
  return w;
}

inline bool meshes_intersect(const WorldMesh& a, const WorldMesh& b) {
  for (std::size_t i = 0; i < a.tris.size(); ++i) {
    for (std::size_t j = 0; j < b.tris.size(); ++j) {
      if (!a.boxes[i].overlaps(b.boxes[j])) continue;
      if (triangles_intersect_edges(a.tris[i], b.tris[j])) return true;
    }
  }
  return false;
}

/// Every part against the tissue and every other part; jointed neighbours use their eroded meshes.
inline bool brute_force_collision(const dcpose::InstrumentSpec& spec, const std::vector<dcpose::RigidPose>& poses,
                                  const dcpose::SceneSpec& scene) {
  const WorldMesh tissue = place(scene.backdrop.vertices, scene.backdrop.triangles, dcpose::RigidPose{});
  const auto adjacent = spec.adjacent_parts();
  std::vector<dcpose::CollisionBody> bodies;
  for (int i = 0; i < spec.part_count(); ++i) bodies.emplace_back(spec.part(i));
  for (int i = 0; i < spec.part_count(); ++i) {
    if (meshes_intersect(place(spec.part(i).vertices, spec.part(i).triangles, poses[i]), tissue)) return true;
    for (int j = i + 1; j < spec.part_count(); ++j) {
      const bool adj = std::find(adjacent.begin(), adjacent.end(), std::make_pair(i, j)) != adjacent.end();
      const auto& bi = adj ? bodies[i].eroded : bodies[i].full;
      const auto& bj = adj ? bodies[j].eroded : bodies[j].full;
      if (meshes_intersect(place(bi.vertices(), bi.triangles(), poses[i]), place(bj.vertices(), bj.triangles(), poses[j]))) {
        return true;
      }
    }
  }
  return false;
}

/// Distance from a point to the shaft axis line of `shaft_pose`.
inline double distance_to_shaft_axis(const dcpose::RigidPose& shaft_pose, const Eigen::Vector3d& p) {
  const Eigen::Vector3d d = shaft_pose.rotation.col(2);
  const Eigen::Vector3d v = p - shaft_pose.translation;
  return (v - v.dot(d) * d).norm();
}

/// Fraction of target mask pixels whose stored coordinate reprojects within `tol` px of the pixel.
inline double coord_reprojection_rate(const dcpose::FrameRecord& frame, int obj_id, const dcpose::SurfaceModel& model,
                                      double tol = 1.0) {
  const auto& pose = frame.part(obj_id).pose;
  long ok = 0, total = 0;
  for (int y = 0; y < frame.label.height(); ++y) {
    for (int x = 0; x < frame.label.width(); ++x) {
      if (frame.label.at(x, y) != obj_id) continue;
      const Eigen::Vector3d c(frame.coord_map.at(x, y, 0), frame.coord_map.at(x, y, 1), frame.coord_map.at(x, y, 2));
      const Eigen::Vector2d uv = dcpose::project(model.denormalize(c), pose, frame.intrinsics);
      ok += (uv - Eigen::Vector2d(x, y)).norm() <= tol;
      ++total;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(ok) / total;
}

}  // namespace oracle
