#pragma once

#include <array>
#include <vector>

#include "dcpose/pose/correspondences.hpp"

namespace dcpose {

/// Grunert's three-point solution. Inputs are unit bearing vectors in the camera
/// frame and object points; returns up to four poses with positive depths.
std::vector<RigidPose> solve_p3p(const std::array<Eigen::Vector3d, 3>& bearings,
                                 const std::array<Eigen::Vector3d, 3>& points);

/// P3P on the first three pairs, candidates ordered by the fourth pair's
/// reprojection error. Candidates place all four points in front of the camera.
/// Throws DegenerateConfiguration when three object points are collinear.
std::vector<RigidPose> pnp_minimal(const std::array<Correspondence, 4>& pairs, const CameraIntrinsics& K);

}  // namespace dcpose
