#include "dcpose/synth/lighting.hpp"

#include <algorithm>
#include <cmath>

#include "dcpose/random.hpp"

namespace dcpose {

SceneSpec randomize_lighting(const SceneSpec& scene, const Eigen::Vector3d& shaft_direction, std::uint64_t seed,
                             const LightingRandomization& o) {
  std::mt19937_64 rng(derive_seed(seed, 31));
  SceneSpec out = scene;
  const double offset = uniform(rng, o.offset_min, o.offset_max);
  Eigen::Vector3d jitter;
  for (int k = 0; k < 3; ++k) jitter[k] = normal(rng);
  out.light.position = scene.trocar + shaft_direction.normalized() * offset + o.jitter_sigma * jitter;
  const double log_mult = uniform(rng, std::log(o.intensity_min), std::log(o.intensity_max));
  out.light.intensity = scene.light.intensity * std::clamp(std::exp(log_mult), o.intensity_min, o.intensity_max);
  return out;
}

}  // namespace dcpose
