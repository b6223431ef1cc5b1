#pragma once

#include <cstdint>

#include "dcpose/synth/instrument.hpp"

namespace dcpose {

struct LightingRandomization {
  double offset_min = 10.0;  // mm along the shaft from the trocar
  double offset_max = 40.0;
  double jitter_sigma = 5.0;  // isotropic Gaussian, mm
  double intensity_min = 0.5;  // multiplier, drawn log-uniformly
  double intensity_max = 2.0;
};

/// Moves the light with the trocar and shaft direction and rescales its intensity.
SceneSpec randomize_lighting(const SceneSpec& scene, const Eigen::Vector3d& shaft_direction, std::uint64_t seed,
                             const LightingRandomization& options = {});

}  // namespace dcpose
