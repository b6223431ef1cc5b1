#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dcpose {

/// Rigid transform mapping object-frame points (mm) into the camera frame.
struct RigidPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidPose identity() { return {}; }

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

  RigidPose inverse() const;

  /// (a * b).apply(x) == a.apply(b.apply(x))
  RigidPose operator*(const RigidPose& other) const;

  /// Orthonormal with det +1 within `tol`.
  bool is_valid(double tol = 1e-9) const;
};

/// Rodrigues map from an axis-angle vector (radians) to a rotation matrix.
Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega);

/// Inverse of exp_so3, returns the axis-angle vector with angle in [0, pi].
Eigen::Vector3d log_so3(const Eigen::Matrix3d& rotation);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Nearest rotation in the Frobenius sense (SVD projection).
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m);

struct CameraIntrinsics {
  double fx = 0;
  double fy = 0;
  double cx = 0;
  double cy = 0;
  int width = 0;
  int height = 0;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies inside the image.
  void validate() const;

  Eigen::Matrix3d matrix() const;
};

/// Pinhole projection of a camera-frame point. Throws BehindCamera when Z <= 1e-9.
Eigen::Vector2d project(const Eigen::Vector3d& camera_point, const CameraIntrinsics& K);

/// Pinhole projection of an object-frame point through `pose`.
Eigen::Vector2d project(const Eigen::Vector3d& object_point, const RigidPose& pose,
                        const CameraIntrinsics& K);

/// Camera-frame point seen at `pixel` with depth `z` (mm along the optical axis).
Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double z, const CameraIntrinsics& K);

}  // namespace dcpose
