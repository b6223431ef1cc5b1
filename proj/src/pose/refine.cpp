#include "dcpose/pose/refine.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "dcpose/errors.hpp"

namespace dcpose {

double reprojection_cost(const RigidPose& pose, const std::vector<Correspondence>& pairs, const CameraIntrinsics& K) {
  double cost = 0;
  for (const auto& c : pairs) {
    const Eigen::Vector3d q = pose.apply(c.point);
    if (q.z() <= 1e-9) return std::numeric_limits<double>::infinity();
    cost += (project(q, K) - c.pixel).squaredNorm();
  }
  return cost;
}

RefineResult refine_pose(const RigidPose& pose, const std::vector<Correspondence>& pairs, const CameraIntrinsics& K,
                         const RefineOptions& opts) {
  if (pairs.size() < 4) throw InvalidArgument("refine_pose: needs at least 4 correspondences");
  RefineResult res;
  res.pose = pose;
  res.initial_cost = res.final_cost = reprojection_cost(pose, pairs, K);
  if (!std::isfinite(res.initial_cost)) return res;

  double mu = 1e-3;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (const auto& c : pairs) {
      const Eigen::Vector3d rx = res.pose.rotation * c.point;
      const Eigen::Vector3d q = rx + res.pose.translation;
      const double iz = 1.0 / q.z();
      const Eigen::Vector2d r = Eigen::Vector2d(K.fx * q.x() * iz + K.cx, K.fy * q.y() * iz + K.cy) - c.pixel;
      Eigen::Matrix<double, 2, 3> dp;
      dp << K.fx * iz, 0, -K.fx * q.x() * iz * iz, 0, K.fy * iz, -K.fy * q.y() * iz * iz;
      Eigen::Matrix<double, 3, 6> dq;
      dq.leftCols<3>() = -skew(rx);
      dq.rightCols<3>().setIdentity();
      const Eigen::Matrix<double, 2, 6> J = dp * dq;
      H.noalias() += J.transpose() * J;
      g.noalias() += J.transpose() * r;
    }
    res.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tolerance) break;

    bool improved = false;
    for (int attempt = 0; attempt < 10 && !improved; ++attempt) {
      Eigen::Matrix<double, 6, 6> A = H;
      A.diagonal() += mu * H.diagonal().cwiseMax(1e-12);
      const Eigen::Matrix<double, 6, 1> delta = A.ldlt().solve(-g);
      if (!delta.allFinite()) {
        mu *= 10;
        continue;
      }
      RigidPose cand;
      cand.rotation = orthonormalize(exp_so3(delta.head<3>()) * res.pose.rotation);
      cand.translation = res.pose.translation + delta.tail<3>();
      const double cost = reprojection_cost(cand, pairs, K);
      if (cost < res.final_cost) {
        const double decrease = res.final_cost - cost;
        res.pose = cand;
        res.final_cost = cost;
        mu = std::max(mu * 0.1, 1e-12);
        improved = true;
        if (decrease < opts.cost_tolerance) return res;
      } else {
        mu *= 10;
      }
    }
    if (!improved) break;
  }
  return res;
}

}  // namespace dcpose
