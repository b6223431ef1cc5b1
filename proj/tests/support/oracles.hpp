#pragma once

// Independent reference implementations used by the unit tests and the acceptance runner.

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "dcpose/geometry/image.hpp"
#include "dcpose/geometry/metrics.hpp"
#include "dcpose/geometry/pose.hpp"
#include "dcpose/nn/tensor.hpp"
#include "dcpose/random.hpp"

namespace oracle {

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  Eigen::Quaterniond q(dcpose::normal(rng), dcpose::normal(rng), dcpose::normal(rng), dcpose::normal(rng));
  return q.normalized().toRotationMatrix();
}

inline double quaternion_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Quaterniond qa(a), qb(b);
  const double d = std::min(1.0, std::abs(qa.coeffs().dot(qb.coeffs())));
  return 2.0 * std::acos(d) * 180.0 / std::numbers::pi;
}

inline double add_loop(const dcpose::RigidPose& pred, const dcpose::RigidPose& gt,
                       const std::vector<Eigen::Vector3d>& vertices) {
  double sum = 0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Eigen::Vector3d a = pred.rotation * vertices[i] + pred.translation;
    const Eigen::Vector3d b = gt.rotation * vertices[i] + gt.translation;
    sum += std::sqrt((a - b).squaredNorm());
  }
  return sum / vertices.size();
}

inline double oks_scalar(const std::vector<dcpose::Keypoint2D>& pred, const std::vector<dcpose::Keypoint2D>& gt,
                         double s, double sigma) {
  double total = 0;
  int n = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    if (!gt[k].visible) continue;
    const double d2 = std::pow(pred[k].x - gt[k].x, 2) + std::pow(pred[k].y - gt[k].y, 2);
    total += std::exp(-d2 / (2 * s * s * sigma * sigma));
    ++n;
  }
  return total / n;
}

inline double map_bruteforce(const std::vector<double>& oks) {
  double acc = 0;
  for (int k = 0; k < 10; ++k) {
    const double thr = 0.5 + 0.05 * k;
    int pass = 0;
    for (double o : oks) pass += o >= thr;
    acc += static_cast<double>(pass) / oks.size();
  }
  return acc / 10;
}

inline double dice_bruteforce(const dcpose::Mask& a, const dcpose::Mask& b) {
  long inter = 0, na = 0, nb = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const bool pa = a.at(x, y) > 0, pb = b.at(x, y) > 0;
      na += pa;
      nb += pb;
      inter += pa && pb;
    }
  }
  return na + nb == 0 ? 1.0 : 2.0 * inter / static_cast<double>(na + nb);
}

/// -log(e^{q.p} / (e^{q.p} + sum w_j e^{q.n_j})) summed directly in long double.
inline double naive_nce(const Eigen::VectorXd& q, const Eigen::VectorXd& p, const std::vector<Eigen::VectorXd>& negs,
                        const std::vector<double>& w) {
  long double pos = std::exp(static_cast<long double>(q.dot(p)));
  long double den = pos;
  for (std::size_t j = 0; j < negs.size(); ++j) den += (w.empty() ? 1.0L : w[j]) * std::exp(static_cast<long double>(q.dot(negs[j])));
  return static_cast<double>(-std::log(pos / den));
}

/// Segment [p, q] against triangle (a, b, c), closed sets, via signed volumes.
inline bool segment_hits_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& q, const Eigen::Vector3d& a,
                                  const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  auto vol = [](const Eigen::Vector3d& u, const Eigen::Vector3d& v, const Eigen::Vector3d& w, const Eigen::Vector3d& x) {
    return (v - u).cross(w - u).dot(x - u);
  };
  const double sp = vol(a, b, c, p), sq = vol(a, b, c, q);
  if ((sp > 0 && sq > 0) || (sp < 0 && sq < 0)) return false;
  if (sp == 0 && sq == 0) return false;  // coplanar, not handled by this oracle
  const double s1 = vol(p, q, a, b), s2 = vol(p, q, b, c), s3 = vol(p, q, c, a);
  return (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
}

/// Non-coplanar triangles intersect iff an edge of one crosses the other.
inline bool triangles_intersect_edges(const std::array<Eigen::Vector3d, 3>& t, const std::array<Eigen::Vector3d, 3>& u) {
  for (int i = 0; i < 3; ++i) {
    if (segment_hits_triangle(t[i], t[(i + 1) % 3], u[0], u[1], u[2])) return true;
    if (segment_hits_triangle(u[i], u[(i + 1) % 3], t[0], t[1], t[2])) return true;
  }
  return false;
}

struct GradCheck {
  double max_rel_error = 0;
  int checked = 0;
};

/// Central differences on every element of every input. `f` rebuilds the graph from the inputs.
/// Relative error |a - n| / max(|a|, |n|, floor).
inline GradCheck finite_difference(const std::function<dcpose::nn::Tensor<double>(std::vector<dcpose::nn::Tensor<double>>&)>& f,
                                   std::vector<dcpose::nn::Tensor<double>>& inputs, double h = 1e-5,
                                   double floor = 1e-6) {
  for (auto& in : inputs) {
    in.grad();
    in.zero_grad();
  }
  f(inputs).backward();
  GradCheck out;
  for (auto& in : inputs) {
    auto v = in.value();
    const auto g = in.grad();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + h;
      const double up = f(inputs).item();
      v[i] = keep - h;
      const double down = f(inputs).item();
      v[i] = keep;
      const double num = (up - down) / (2 * h);
      const double rel = std::abs(g[i] - num) / std::max({std::abs(g[i]), std::abs(num), floor});
      out.max_rel_error = std::max(out.max_rel_error, rel);
      ++out.checked;
    }
  }
  return out;
}

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo = -1, double hi = 1) {
  std::vector<double> v(n);
  for (auto& x : v) x = dcpose::uniform(rng, lo, hi);
  return v;
}

}  // namespace oracle
