#pragma once

#include <vector>

#include "dcpose/pose/correspondences.hpp"

namespace dcpose {

struct RefineOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;
  double cost_tolerance = 1e-12;
};

struct RefineResult {
  RigidPose pose;
  double initial_cost = 0;  // sum of squared reprojection errors, px^2
  double final_cost = 0;
  int iterations = 0;
};

/// Levenberg-Marquardt on the summed squared reprojection error. Updates are
/// R <- exp(w) R, t <- t + dt; a step is only taken when it lowers the cost.
RefineResult refine_pose(const RigidPose& pose, const std::vector<Correspondence>& pairs, const CameraIntrinsics& K,
                         const RefineOptions& opts = {});

double reprojection_cost(const RigidPose& pose, const std::vector<Correspondence>& pairs, const CameraIntrinsics& K);

}  // namespace dcpose
