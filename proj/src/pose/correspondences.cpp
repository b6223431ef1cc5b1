#include "dcpose/pose/correspondences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "dcpose/errors.hpp"
#include "dcpose/random.hpp"

namespace dcpose {
namespace {

std::size_t draw_cumulative(const std::vector<double>& cumulative, std::mt19937_64& rng) {
  const double r = uniform01(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

}  // namespace

KeyBank sample_key_bank(const SurfaceModel& model, int count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("sample_key_bank: count must be positive");
  const SurfaceSampler sampler(model);
  std::mt19937_64 rng(seed);
  KeyBank bank;
  for (int i = 0; i < count; ++i) {
    const SurfaceSample s = sampler.sample(rng);
    bank.points.push_back(sampler.point(s));
    bank.normalized_points.push_back(sampler.normalized_point(s));
  }
  return bank;
}

CorrespondenceSet build_correspondences(const DenseEmbeddingMap& map, const KeyBank& bank, const CropWindow& crop,
                                        const CameraIntrinsics& K, const CorrespondenceOptions& opts,
                                        std::uint64_t seed) {
  const std::size_t P = static_cast<std::size_t>(map.width) * map.height;
  if (map.mask_probs.size() != P || static_cast<std::size_t>(map.embeddings.rows()) != P) {
    throw InvalidArgument("build_correspondences: map size mismatch");
  }
  if (bank.points.empty() || static_cast<std::size_t>(bank.embeddings.rows()) != bank.points.size() ||
      bank.embeddings.cols() != map.embeddings.cols()) {
    throw InvalidArgument("build_correspondences: key bank does not match the embedding map");
  }
  CorrespondenceSet out;
  out.intrinsics = K;
  out.crop = crop;

  std::vector<double> cumulative(P);
  double acc = 0;
  for (std::size_t p = 0; p < P; ++p) {
    acc += std::max(0.0, map.mask_probs[p]);
    cumulative[p] = acc;
  }
  if (!(acc > 0) || opts.samples < 1) return out;

  std::mt19937_64 rng(seed);
  std::unordered_map<std::size_t, std::pair<std::vector<double>, double>> softmax_cache;  // cumulative, normalizer
  for (int s = 0; s < opts.samples; ++s) {
    const std::size_t p = draw_cumulative(cumulative, rng);
    auto it = softmax_cache.find(p);
    if (it == softmax_cache.end()) {
      const Eigen::VectorXd logits = opts.inverse_temperature * (bank.embeddings * map.embeddings.row(p).transpose());
      const double mx = logits.maxCoeff();
      std::vector<double> cum(logits.size());
      double z = 0;
      for (Eigen::Index k = 0; k < logits.size(); ++k) {
        z += std::exp(logits[k] - mx);
        cum[k] = z;
      }
      it = softmax_cache.emplace(p, std::make_pair(std::move(cum), z)).first;
    }
    const auto& [cum, z] = it->second;
    const std::size_t k = draw_cumulative(cum, rng);
    const double prob = (cum[k] - (k ? cum[k - 1] : 0.0)) / z;
    const int u = static_cast<int>(p % map.width), v = static_cast<int>(p / map.width);
    out.pairs.push_back({crop.to_image(u, v), bank.points[k], map.mask_probs[p] * prob});
  }
  return out;
}

double reprojection_error(const RigidPose& pose, const Correspondence& c, const CameraIntrinsics& K) {
  const Eigen::Vector3d q = pose.apply(c.point);
  if (q.z() <= 1e-9) return std::numeric_limits<double>::infinity();
  return (project(q, K) - c.pixel).norm();
}

}  // namespace dcpose
