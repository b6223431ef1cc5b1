#include "dcpose/geometry/pose.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "dcpose/errors.hpp"

namespace dcpose {

RigidPose RigidPose::inverse() const {
  RigidPose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidPose RigidPose::operator*(const RigidPose& other) const {
  RigidPose out;
  out.rotation = rotation * other.rotation;
  out.translation = rotation * other.translation + translation;
  return out;
}

bool RigidPose::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  const Eigen::Matrix3d k = skew(omega);
  if (theta < 1e-8) {
    // second-order Taylor expansion
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * k + b * k * k;
}

Eigen::Vector3d log_so3(const Eigen::Matrix3d& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw InvalidArgument("CameraIntrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("CameraIntrinsics: image size must be positive");
  if (!(cx >= 0 && cx < width && cy >= 0 && cy < height)) {
    throw InvalidArgument("CameraIntrinsics: principal point outside the image");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Eigen::Vector2d project(const Eigen::Vector3d& p, const CameraIntrinsics& K) {
  if (!(p.z() > 1e-9)) throw BehindCamera("project: point at or behind the camera plane");
  return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy};
}

Eigen::Vector2d project(const Eigen::Vector3d& object_point, const RigidPose& pose,
                        const CameraIntrinsics& K) {
  return project(pose.apply(object_point), K);
}

Eigen::Vector3d back_project(const Eigen::Vector2d& pixel, double z, const CameraIntrinsics& K) {
  return {(pixel.x() - K.cx) / K.fx * z, (pixel.y() - K.cy) / K.fy * z, z};
}

}  // namespace dcpose
