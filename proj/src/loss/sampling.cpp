#include <map>
#include <random>

#include "dcpose/errors.hpp"
#include "dcpose/loss/pairs.hpp"
#include "dcpose/random.hpp"

namespace dcpose {

PairBatch sample_pairs(const Mask& mask, const Image<float>& coord_map, const SurfaceSampler& sampler, int n_pos,
                       int n_neg, std::uint64_t seed) {
  if (n_pos < 0 || n_neg < 0) throw InvalidArgument("sample_pairs: negative sample count");
  if (coord_map.channels() != 3 || coord_map.width() != mask.width() || coord_map.height() != mask.height()) {
    throw InvalidArgument("sample_pairs: coord map does not match mask");
  }
  std::vector<std::pair<int, int>> pixels;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y)) pixels.emplace_back(x, y);
    }
  }
  if (pixels.empty() && n_pos > 0) throw InvalidArgument("sample_pairs: empty mask");

  std::mt19937_64 rng(seed);
  PairBatch batch;
  batch.positives.reserve(n_pos);
  for (int i = 0; i < n_pos; ++i) {
    const auto [x, y] = pixels[uniform_index(rng, pixels.size())];
    batch.positives.push_back({x, y, {coord_map.at(x, y, 0), coord_map.at(x, y, 1), coord_map.at(x, y, 2)}});
  }
  batch.negatives.reserve(n_neg);
  for (int j = 0; j < n_neg; ++j) batch.negatives.push_back(sampler.normalized_point(sampler.sample(rng)));
  return batch;
}

PairBatch sample_pairs(const FrameRecord& frame, int obj_id, const SurfaceModel& model, int n_pos, int n_neg,
                       std::uint64_t seed) {
  const SurfaceSampler sampler(model);
  return sample_pairs(frame.part(obj_id).mask_visib, frame.coord_map, sampler, n_pos, n_neg, seed);
}

std::vector<int> unique_point_indices(const std::vector<Eigen::Vector3d>& points) {
  std::map<std::array<double, 3>, int> seen;
  std::vector<int> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (seen.emplace(std::array<double, 3>{points[i].x(), points[i].y(), points[i].z()}, static_cast<int>(i)).second) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

}  // namespace dcpose
