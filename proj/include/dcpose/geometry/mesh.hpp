#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace dcpose {

using Triangle = std::array<int, 3>;

/// Triangle mesh in its object frame (mm) together with the normalized copy
/// the embedding networks operate on.
///
/// Normalization maps every vertex into a ball of diameter 1 centered at the
/// origin: normalized = (v - center) * scale, with the ball radius fixed at 0.5,
/// so any two normalized surface points are at most 1 apart.
struct SurfaceModel {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<Triangle> triangles;
  std::vector<Eigen::Vector3d> normalized_vertices;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double scale = 1.0;
  double diameter = 0.0;
  std::map<std::string, Eigen::Vector3d> keypoints;

  bool empty() const { return vertices.empty(); }

  Eigen::Vector3d normalize(const Eigen::Vector3d& object_point) const {
    return (object_point - center) * scale;
  }
  Eigen::Vector3d denormalize(const Eigen::Vector3d& normalized_point) const {
    return normalized_point / scale + center;
  }

  double triangle_area(std::size_t t) const;
  Eigen::Vector3d triangle_normal(std::size_t t) const;

  /// Throws InvalidArgument when the invariants do not hold.
  void validate() const;
};

/// Builds a model from raw geometry: computes the diameter (max pairwise vertex
/// distance) and the normalization.
SurfaceModel make_surface_model(std::vector<Eigen::Vector3d> vertices, std::vector<Triangle> triangles,
                                std::map<std::string, Eigen::Vector3d> keypoints = {});

/// Concatenates meshes (indices are offset); the result is re-normalized.
SurfaceModel merge_models(const std::vector<SurfaceModel>& parts);

/// Wavefront OBJ import (v / f records; polygons are fan-triangulated).
SurfaceModel load_obj(const std::filesystem::path& path);

/// ASCII PLY (vertex x y z, face vertex_indices).
void save_ply(const SurfaceModel& model, const std::filesystem::path& path);
SurfaceModel load_ply(const std::filesystem::path& path);

/// A point sampled on the surface: triangle index and barycentric weights.
struct SurfaceSample {
  int triangle = 0;
  Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
};

/// Area-weighted, uniform-barycentric surface sampler.
class SurfaceSampler {
 public:
  explicit SurfaceSampler(const SurfaceModel& model);

  SurfaceSample sample(std::mt19937_64& rng) const;

  /// Point in the object frame (mm).
  Eigen::Vector3d point(const SurfaceSample& s) const;
  /// Point in normalized coordinates.
  Eigen::Vector3d normalized_point(const SurfaceSample& s) const;

 private:
  const SurfaceModel* model_;
  std::vector<double> cumulative_area_;
};

}  // namespace dcpose
