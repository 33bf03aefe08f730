#pragma once

#include "fog/dbf.hpp"
#include "fog/depth.hpp"
#include "fog/types.hpp"

#include <optional>

namespace fog {

// Clear-weather scene with everything fog synthesis needs.
struct LabeledScene {
  RgbImage clear;
  ScalarMap disparity;
  SemanticLabeling labels;
  CameraModel camera;
  std::optional<int> sky_label;  // restricts atmospheric light estimation
};

struct AtmosphericLightParams {
  int dark_channel_window = 15;     // min-filter window (odd)
  Scalar brightest_fraction = 1e-3; // share of dark-channel pixels averaged
};

// Global atmospheric light: mean color of the brightest `brightest_fraction`
// of pixels in the dark channel, restricted to `sky_label` pixels when a
// labeling is supplied and the region is non-empty. Deterministic.
Vec3 estimate_atmospheric_light(const RgbImage& img, const SemanticLabeling* labels = nullptr,
                                std::optional<int> sky_label = std::nullopt,
                                const AtmosphericLightParams& params = {});

// I(x) = R(x) t(x) + L (1 - t(x)), clamped to [0,1].
RgbImage synthesize_fog(const RgbImage& clear, const ScalarMap& t, const Vec3& light);

enum class FogRegime { Clear, Mist, Fog };

struct SimulationParams {
  FilterParams filter;
  GridConfig grid;
  SlicParams slic;
  RansacParams ransac;
  DistanceClamp clamp;
  AtmosphericLightParams light;
  std::optional<Vec3> fixed_light;  // overrides estimation when set
};

struct SimulationResult {
  RgbImage foggy;
  ScalarMap t;        // filtered transmittance
  ScalarMap t_hat;    // unfiltered exp(-beta * distance)
  ScalarMap distance; // completed scene distance (m)
  Vec3 light = Vec3::Ones();
  FogRegime regime = FogRegime::Clear;
};

// Depth-and-filter state of a scene that is independent of beta; lets one
// scene be simulated at several fog densities without redoing completion.
struct PreparedScene {
  const LabeledScene* scene = nullptr;
  LabImage lab;
  ScalarMap distance;
  Vec3 light = Vec3::Ones();
};

PreparedScene prepare_scene(const LabeledScene& scene, const SimulationParams& params = {});
SimulationResult simulate_prepared(const PreparedScene& prepared, Scalar beta,
                                   const SimulationParams& params = {});

// Full pipeline: outlier detection, superpixel plane completion,
// transmittance, dual-reference filtering, compositing.
SimulationResult simulate(const LabeledScene& scene, Scalar beta,
                          const SimulationParams& params = {});

}  // namespace fog
