#include "dcpose/pose/p3p.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

#include "dcpose/errors.hpp"

namespace dcpose {
namespace {

/// Real roots of sum_i c[i] x^i (c[4] leading), via the companion matrix and Newton polishing.
std::vector<double> real_roots(std::array<double, 5> c) {
  const double cmax = std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2]), std::abs(c[3]), std::abs(c[4])});
  if (cmax == 0) return {};
  int deg = 4;
  while (deg > 0 && std::abs(c[deg]) <= 1e-14 * cmax) --deg;
  if (deg == 0) return {};
  Eigen::Matrix4d comp = Eigen::Matrix4d::Zero();
  for (int i = 0; i < deg; ++i) comp(0, i) = -c[deg - 1 - i] / c[deg];
  for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  Eigen::VectorXcd eigenvalues;
  if (deg == 4) {
    eigenvalues = Eigen::EigenSolver<Eigen::Matrix4d>(comp, false).eigenvalues();
  } else {
    eigenvalues = Eigen::EigenSolver<Eigen::MatrixXd>(comp.topLeftCorner(deg, deg), false).eigenvalues();
  }
  auto poly = [&](double x, double& d) {
    double p = 0;
    d = 0;
    for (int i = deg; i >= 0; --i) {
      d = d * x + p;
      p = p * x + c[i];
    }
    return p;
  };
  std::vector<double> roots;
  for (int i = 0; i < deg; ++i) {
    const auto z = eigenvalues[i];
    if (std::abs(z.imag()) > 1e-4 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 8; ++it) {
      double d;
      const double p = poly(x, d);
      if (d == 0) break;
      const double step = p / d;
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    roots.push_back(x);
  }
  return roots;
}

Eigen::Matrix3d triangle_frame(const std::array<Eigen::Vector3d, 3>& p) {
  Eigen::Matrix3d f;
  f.col(0) = (p[1] - p[0]).normalized();
  f.col(2) = f.col(0).cross(p[2] - p[0]).normalized();
  f.col(1) = f.col(2).cross(f.col(0));
  return f;
}

/// Rigid transform taking the `src` triangle onto the congruent `dst` triangle.
RigidPose align(const std::array<Eigen::Vector3d, 3>& src, const std::array<Eigen::Vector3d, 3>& dst) {
  RigidPose pose;
  pose.rotation = triangle_frame(dst) * triangle_frame(src).transpose();
  const Eigen::Vector3d cs = (src[0] + src[1] + src[2]) / 3.0, cd = (dst[0] + dst[1] + dst[2]) / 3.0;
  pose.translation = cd - pose.rotation * cs;
  return pose;
}

/// Newton iterations on the three depths so the camera-frame triangle matches the side lengths.
void polish_depths(const std::array<Eigen::Vector3d, 3>& j, double a2, double b2, double c2, Eigen::Vector3d& d) {
  for (int it = 0; it < 5; ++it) {
    const Eigen::Vector3d p0 = d[0] * j[0], p1 = d[1] * j[1], p2 = d[2] * j[2];
    const Eigen::Vector3d r((p1 - p2).squaredNorm() - a2, (p0 - p2).squaredNorm() - b2, (p0 - p1).squaredNorm() - c2);
    Eigen::Matrix3d J;
    J << 0, 2 * (p1 - p2).dot(j[1]), -2 * (p1 - p2).dot(j[2]),
        2 * (p0 - p2).dot(j[0]), 0, -2 * (p0 - p2).dot(j[2]),
        2 * (p0 - p1).dot(j[0]), -2 * (p0 - p1).dot(j[1]), 0;
    const Eigen::Vector3d step = J.partialPivLu().solve(r);
    if (!step.allFinite()) return;
    d -= step;
    if (step.norm() < 1e-15 * d.norm()) return;
  }
}

bool collinear(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d u = b - a, v = c - a;
  const double denom = u.norm() * v.norm();
  return denom == 0 || u.cross(v).norm() <= 1e-9 * denom;
}

}  // namespace

std::vector<RigidPose> solve_p3p(const std::array<Eigen::Vector3d, 3>& bearings,
                                 const std::array<Eigen::Vector3d, 3>& points) {
  if (collinear(points[0], points[1], points[2])) throw DegenerateConfiguration("solve_p3p: collinear object points");
  const double a2 = (points[1] - points[2]).squaredNorm();
  const double b2 = (points[0] - points[2]).squaredNorm();
  const double c2 = (points[0] - points[1]).squaredNorm();
  const Eigen::Vector3d j1 = bearings[0].normalized(), j2 = bearings[1].normalized(), j3 = bearings[2].normalized();
  const double ca = j2.dot(j3), cb = j1.dot(j3), cg = j1.dot(j2);

  const double amc = (a2 - c2) / b2, apc = (a2 + c2) / b2, bmc = (b2 - c2) / b2, bma = (b2 - a2) / b2;
  std::array<double, 5> A;
  A[4] = (amc - 1) * (amc - 1) - 4 * c2 / b2 * ca * ca;
  A[3] = 4 * (amc * (1 - amc) * cb - (1 - apc) * ca * cg + 2 * c2 / b2 * ca * ca * cb);
  A[2] = 2 * (amc * amc - 1 + 2 * amc * amc * cb * cb + 2 * bmc * ca * ca - 4 * apc * ca * cb * cg + 2 * bma * cg * cg);
  A[1] = 4 * (-amc * (1 + amc) * cb + 2 * a2 / b2 * cg * cg * cb - (1 - apc) * ca * cg);
  A[0] = (1 + amc) * (1 + amc) - 4 * a2 / b2 * cg * cg;

  std::vector<RigidPose> out;
  for (double v : real_roots(A)) {
    if (!(v > 0)) continue;
    const double den = 2 * (cg - v * ca);
    if (std::abs(den) < 1e-12) continue;
    const double u = ((-1 + amc) * v * v - 2 * amc * cb * v + 1 + amc) / den;
    if (!(u > 0)) continue;
    const double q = 1 + u * u - 2 * u * cg;
    if (!(q > 0)) continue;
    const double s1 = std::sqrt(c2 / q);
    Eigen::Vector3d depth(s1, u * s1, v * s1);
    const Eigen::Vector3d before = depth;
    polish_depths({j1, j2, j3}, a2, b2, c2, depth);
    if (!(depth.minCoeff() > 0) || (depth - before).norm() > 1e-3 * before.norm()) depth = before;
    const std::array<Eigen::Vector3d, 3> cam = {depth[0] * j1, depth[1] * j2, depth[2] * j3};
    // drop spurious roots that do not reproduce the triangle
    const double err = std::abs((cam[1] - cam[2]).squaredNorm() - a2) + std::abs((cam[0] - cam[2]).squaredNorm() - b2) +
                       std::abs((cam[0] - cam[1]).squaredNorm() - c2);
    if (err > 1e-6 * (a2 + b2 + c2)) continue;
    RigidPose pose = align(points, cam);
    if (!pose.rotation.allFinite() || !pose.translation.allFinite()) continue;
    out.push_back(pose);
  }
  return out;
}

std::vector<RigidPose> pnp_minimal(const std::array<Correspondence, 4>& pairs, const CameraIntrinsics& K) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      for (int k = j + 1; k < 4; ++k) {
        if (collinear(pairs[i].point, pairs[j].point, pairs[k].point)) {
          throw DegenerateConfiguration("pnp_minimal: three collinear object points");
        }
      }
    }
  }
  std::array<Eigen::Vector3d, 3> bearings, points;
  for (int i = 0; i < 3; ++i) {
    bearings[i] = Eigen::Vector3d((pairs[i].pixel.x() - K.cx) / K.fx, (pairs[i].pixel.y() - K.cy) / K.fy, 1.0).normalized();
    points[i] = pairs[i].point;
  }
  std::vector<std::pair<double, RigidPose>> ranked;
  for (const RigidPose& pose : solve_p3p(bearings, points)) {
    bool in_front = true;
    for (const auto& c : pairs) in_front = in_front && pose.apply(c.point).z() > 1e-9;
    if (!in_front) continue;
    ranked.emplace_back(reprojection_error(pose, pairs[3], K), pose);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<RigidPose> out;
  for (auto& [e, pose] : ranked) out.push_back(pose);
  return out;
}

}  // namespace dcpose
