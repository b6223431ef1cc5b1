#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "dcpose/geometry/image.hpp"
#include "dcpose/geometry/mesh.hpp"
#include "dcpose/synth/raster.hpp"

namespace dcpose {

struct PixelSample {
  int x = 0;
  int y = 0;
  Eigen::Vector3d coord = Eigen::Vector3d::Zero();  // normalized object coordinate c_i
};

/// Query pixels with their ground-truth surface coordinates, plus area-uniform
/// negative surface points, all in normalized coordinates.
struct PairBatch {
  std::vector<PixelSample> positives;
  std::vector<Eigen::Vector3d> negatives;
};

/// Positives are mask pixels drawn uniformly with replacement; coordinates are
/// read from `coord_map` (3 channels). Negatives come from `sampler`.
PairBatch sample_pairs(const Mask& mask, const Image<float>& coord_map, const SurfaceSampler& sampler, int n_pos,
                       int n_neg, std::uint64_t seed);

/// Same, on a rendered frame: the mask is the visible mask of part `obj_id`.
PairBatch sample_pairs(const FrameRecord& frame, int obj_id, const SurfaceModel& model, int n_pos, int n_neg,
                       std::uint64_t seed);

/// Indices of the first occurrence of each distinct point, in input order.
std::vector<int> unique_point_indices(const std::vector<Eigen::Vector3d>& points);

}  // namespace dcpose
