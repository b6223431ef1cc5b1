#pragma once

#include <cstdint>
#include <vector>

#include "dcpose/pose/correspondences.hpp"

namespace dcpose {

struct RansacConfig {
  int iterations = 10000;
  double threshold_px = 2.0;
  int min_set = 4;
  bool refine = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PnpResult {
  bool solved = false;
  RigidPose pose;
  std::vector<int> inliers;  // indices into the input pairs, ascending
  double score = 0;          // summed score of the inliers
  double mean_error = 0;     // mean inlier reprojection error, px
};

/// Hypotheses from random minimal sets ranked by score-weighted inlier count,
/// ties broken by lower mean error. Fewer than four inliers gives solved = false.
PnpResult ransac_pnp(const CorrespondenceSet& corrs, const RansacConfig& cfg);

}  // namespace dcpose
