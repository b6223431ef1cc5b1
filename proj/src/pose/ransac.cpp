#include "dcpose/pose/ransac.hpp"

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <tuple>

#include "dcpose/errors.hpp"
#include "dcpose/pose/p3p.hpp"
#include "dcpose/pose/refine.hpp"
#include "dcpose/random.hpp"

namespace dcpose {

void RansacConfig::validate() const {
  if (iterations < 1) throw InvalidArgument("RansacConfig: iterations must be >= 1");
  if (!(threshold_px > 0)) throw InvalidArgument("RansacConfig: threshold must be positive");
  if (min_set != 4) throw InvalidArgument("RansacConfig: the minimal solver uses exactly 4 pairs");
}

namespace {

struct Support {
  double score = 0;
  double error_sum = 0;
  int count = 0;

  double mean_error() const { return count ? error_sum / count : 0.0; }
  bool better_than(const Support& o) const {
    if (score != o.score) return score > o.score;
    return mean_error() < o.mean_error();
  }
};

Support evaluate(const RigidPose& pose, const std::vector<Correspondence>& pairs, const CameraIntrinsics& K,
                 double threshold, std::vector<int>* inliers = nullptr) {
  Support s;
  if (inliers) inliers->clear();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double e = reprojection_error(pose, pairs[i], K);
    if (e < threshold) {
      s.score += pairs[i].score;
      s.error_sum += e;
      ++s.count;
      if (inliers) inliers->push_back(static_cast<int>(i));
    }
  }
  return s;
}

/// Same support as evaluate(), but gives up (returning nullopt) as soon as the
/// hypothesis can no longer match `bound` even if every remaining pair were an inlier.
/// suffix[i] is the summed score of pairs i..n-1.
std::optional<Support> evaluate_bounded(const RigidPose& pose, const std::vector<Correspondence>& pairs,
                                        const std::vector<double>& suffix, const CameraIntrinsics& K, double threshold,
                                        const Support* bound) {
  Support s;
  const Eigen::Matrix3d& R = pose.rotation;
  const Eigen::Vector3d& t = pose.translation;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (bound && s.score + suffix[i] < bound->score) return std::nullopt;
    const Eigen::Vector3d q = R * pairs[i].point + t;
    if (q.z() <= 1e-9) continue;
    const double dx = K.fx * q.x() / q.z() + K.cx - pairs[i].pixel.x();
    const double dy = K.fy * q.y() / q.z() + K.cy - pairs[i].pixel.y();
    const double e = std::sqrt(dx * dx + dy * dy);
    if (e < threshold) {
      s.score += pairs[i].score;
      s.error_sum += e;
      ++s.count;
    }
  }
  return s;
}

}  // namespace

PnpResult ransac_pnp(const CorrespondenceSet& corrs, const RansacConfig& cfg) {
  cfg.validate();
  PnpResult result;
  const std::size_t n = corrs.pairs.size();
  if (n < 4) return result;
  const CameraIntrinsics& K = corrs.intrinsics;

  // canonical order so the outcome does not depend on the input order
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](int i) {
    const auto& c = corrs.pairs[i];
    return std::make_tuple(c.pixel.x(), c.pixel.y(), c.point.x(), c.point.y(), c.point.z(), c.score);
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
  std::vector<Correspondence> pairs;
  pairs.reserve(n);
  for (int i : order) pairs.push_back(corrs.pairs[i]);

  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + pairs[i].score;

  std::mt19937_64 rng(cfg.seed);
  bool have = false;
  RigidPose best_pose;
  Support best;
  for (int it = 0; it < cfg.iterations; ++it) {
    std::array<std::size_t, 4> idx;
    for (int k = 0; k < 4; ++k) {
      bool fresh;
      do {
        idx[k] = uniform_index(rng, n);
        fresh = std::find(idx.begin(), idx.begin() + k, idx[k]) == idx.begin() + k;
      } while (!fresh);
    }
    std::sort(idx.begin(), idx.end());
    const std::array<Correspondence, 4> sample = {pairs[idx[0]], pairs[idx[1]], pairs[idx[2]], pairs[idx[3]]};
    std::vector<RigidPose> candidates;
    try {
      candidates = pnp_minimal(sample, K);
    } catch (const DegenerateConfiguration&) {
      continue;
    }
    for (const RigidPose& pose : candidates) {
      const auto s = evaluate_bounded(pose, pairs, suffix, K, cfg.threshold_px, have ? &best : nullptr);
      if (s && (!have || s->better_than(best))) {
        have = true;
        best = *s;
        best_pose = pose;
      }
    }
  }
  if (!have || best.count < 4) return result;

  std::vector<int> inliers;
  evaluate(best_pose, pairs, K, cfg.threshold_px, &inliers);
  if (cfg.refine) {
    std::vector<Correspondence> subset;
    for (int i : inliers) subset.push_back(pairs[i]);
    const RefineResult r = refine_pose(best_pose, subset, K);
    std::vector<int> refined;
    const Support s = evaluate(r.pose, pairs, K, cfg.threshold_px, &refined);
    if (s.count >= 4) {
      best_pose = r.pose;
      best = s;
      inliers = std::move(refined);
    }
  }
  result.solved = best.count >= 4;
  result.pose = best_pose;
  result.score = best.score;
  result.mean_error = best.mean_error();
  for (int i : inliers) result.inliers.push_back(order[i]);
  std::sort(result.inliers.begin(), result.inliers.end());
  return result;
}

}  // namespace dcpose
