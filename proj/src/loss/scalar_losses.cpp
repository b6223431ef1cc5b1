#include <algorithm>
#include <cmath>

#include "dcpose/errors.hpp"
#include "dcpose/loss/losses.hpp"

namespace dcpose {

void LossWeights::validate() const {
  if (!(alpha >= 0) || !(beta >= 0)) throw InvalidArgument("LossWeights: alpha and beta must be non-negative");
  if (!(lambda > 0)) throw InvalidArgument("LossWeights: lambda must be positive");
  if (!(m > 0 && m <= 1)) throw InvalidArgument("LossWeights: m must lie in (0, 1]");
  if (!(alpha * std::log(2.0) < 1.0)) throw InvalidArgument("LossWeights: alpha * ln 2 must be below 1");
}

double penalty(const Eigen::Vector3d& ci, const Eigen::Vector3d& cj, double alpha) {
  return 1.0 - alpha * std::log((cj - ci).norm() + 1.0);
}

double consistency_weight(const Eigen::Vector3d& ci, const Eigen::Vector3d& cj, double lambda, double m) {
  return std::max(m, std::exp(-lambda * (ci - cj).norm()));
}

double penalized_info_nce(const Eigen::VectorXd& query, const Eigen::VectorXd& positive,
                          const std::vector<Eigen::VectorXd>& negatives, const std::vector<double>& weights) {
  if (!weights.empty() && weights.size() != negatives.size()) {
    throw InvalidArgument("penalized_info_nce: one weight per negative required");
  }
  const double s0 = query.dot(positive);
  std::vector<double> s(negatives.size());
  double mx = s0;
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    s[j] = query.dot(negatives[j]);
    mx = std::max(mx, s[j]);
  }
  double z = std::exp(s0 - mx);
  for (std::size_t j = 0; j < s.size(); ++j) z += (weights.empty() ? 1.0 : weights[j]) * std::exp(s[j] - mx);
  return -s0 + mx + std::log(z);
}

double info_nce(const Eigen::VectorXd& query, const Eigen::VectorXd& positive,
                const std::vector<Eigen::VectorXd>& negatives) {
  return penalized_info_nce(query, positive, negatives, {});
}

double mask_bce(const std::vector<double>& probabilities, const std::vector<std::uint8_t>& labels) {
  if (probabilities.size() != labels.size() || probabilities.empty()) {
    throw InvalidArgument("mask_bce: probabilities and labels must be equal-sized and nonempty");
  }
  // clamp to the probability range reachable from clamped logits
  const double lo = 1.0 / (1.0 + std::exp(kLogitClamp));
  double total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i], lo, 1.0 - lo);
    total += labels[i] ? -std::log(p) : -std::log1p(-p);
  }
  return total / static_cast<double>(labels.size());
}

double consistency_loss(const std::vector<Eigen::Vector3d>& points, const std::vector<Eigen::VectorXd>& embeddings,
                        double lambda, double m) {
  const std::size_t n = points.size();
  if (n < 2 || embeddings.size() != n) throw InvalidArgument("consistency_loss: need N >= 2 matching points and embeddings");
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = (points[i] - points[j]).norm() - (embeddings[i] - embeddings[j]).norm();
      total += consistency_weight(points[i], points[j], lambda, m) * r * r;
    }
  }
  return 2.0 * total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

std::vector<double> penalty_matrix(const std::vector<Eigen::Vector3d>& query_coords,
                                   const std::vector<Eigen::Vector3d>& negative_coords, double alpha) {
  std::vector<double> out;
  out.reserve(query_coords.size() * negative_coords.size());
  for (const auto& ci : query_coords) {
    for (const auto& cj : negative_coords) out.push_back(penalty(ci, cj, alpha));
  }
  return out;
}

}  // namespace dcpose
