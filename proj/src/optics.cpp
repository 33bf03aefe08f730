#include "fog/optics.hpp"

#include "fog/color.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace fog {

namespace {

// Separable min filter (window x window, clamped borders).
ArrayXX min_filter(const ArrayXX& in, int window) {
  const int r = window / 2;
  const Eigen::Index h = in.rows(), w = in.cols();
  ArrayXX tmp(h, w), out(h, w);
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) {
      const Eigen::Index y0 = std::max<Eigen::Index>(0, y - r);
      const Eigen::Index y1 = std::min<Eigen::Index>(h - 1, y + r);
      double m = in(y0, x);
      for (Eigen::Index yy = y0 + 1; yy <= y1; ++yy) m = std::min(m, in(yy, x));
      tmp(y, x) = m;
    }
  }
  for (Eigen::Index x = 0; x < w; ++x) {
    const Eigen::Index x0 = std::max<Eigen::Index>(0, x - r);
    const Eigen::Index x1 = std::min<Eigen::Index>(w - 1, x + r);
    for (Eigen::Index y = 0; y < h; ++y) {
      double m = tmp(y, x0);
      for (Eigen::Index xx = x0 + 1; xx <= x1; ++xx) m = std::min(m, tmp(y, xx));
      out(y, x) = m;
    }
  }
  return out;
}

}  // namespace

Vec3 estimate_atmospheric_light(const RgbImage& img, const SemanticLabeling* labels,
                                std::optional<int> sky_label,
                                const AtmosphericLightParams& params) {
  const Eigen::Index h = img.height(), w = img.width();
  if (h * w == 0) throw std::invalid_argument("estimate_atmospheric_light: empty image");

  const ArrayXX dark = min_filter(img.r.min(img.g).min(img.b), params.dark_channel_window);

  std::vector<Eigen::Index> candidates;
  if (labels && sky_label) {
    require_same_shape(h, w, labels->height(), labels->width(), "estimate_atmospheric_light");
    for (Eigen::Index x = 0; x < w; ++x)
      for (Eigen::Index y = 0; y < h; ++y)
        if (labels->class_of(labels->ids(y, x)) == *sky_label) candidates.push_back(y * w + x);
  }
  if (candidates.empty()) {
    candidates.resize(static_cast<size_t>(h * w));
    std::iota(candidates.begin(), candidates.end(), 0);
  }

  const size_t keep = std::max<size_t>(
      1, static_cast<size_t>(std::floor(params.brightest_fraction * candidates.size())));
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep),
                    candidates.end(), [&](Eigen::Index lhs, Eigen::Index rhs) {
                      const double dl = dark(lhs / w, lhs % w), dr = dark(rhs / w, rhs % w);
                      if (dl != dr) return dl > dr;
                      return lhs < rhs;
                    });

  Vec3 sum = Vec3::Zero();
  for (size_t i = 0; i < keep; ++i)
    sum += img.at(candidates[i] / w, candidates[i] % w);
  Vec3 light = sum / static_cast<double>(keep);
  return light.cwiseMax(0.0).cwiseMin(1.0);
}

RgbImage synthesize_fog(const RgbImage& clear, const ScalarMap& t, const Vec3& light) {
  require_same_shape(clear.height(), clear.width(), t.height(), t.width(), "synthesize_fog");
  RgbImage out(clear.height(), clear.width());
  out.r = clear.r * t.values + light[0] * (1.0 - t.values);
  out.g = clear.g * t.values + light[1] * (1.0 - t.values);
  out.b = clear.b * t.values + light[2] * (1.0 - t.values);
  return out.clamped01();
}

PreparedScene prepare_scene(const LabeledScene& scene, const SimulationParams& params) {
  PreparedScene prep;
  prep.scene = &scene;
  prep.lab = rgb_to_lab(scene.clear);

  const SuperpixelPartition partition = slic(prep.lab, params.slic);
  const ScalarMap cleaned = detect_outliers(scene.disparity, partition);
  const auto fits = fit_planes(cleaned, partition, params.ransac);
  prep.distance = complete_depth(cleaned, fits, partition, scene.camera, params.clamp);

  prep.light = params.fixed_light
                   ? *params.fixed_light
                   : estimate_atmospheric_light(scene.clear, &scene.labels, scene.sky_label,
                                                params.light);
  return prep;
}

SimulationResult simulate_prepared(const PreparedScene& prepared, Scalar beta,
                                   const SimulationParams& params) {
  const LabeledScene& scene = *prepared.scene;
  SimulationResult res;
  res.light = prepared.light;
  res.distance = prepared.distance;

  if (beta < 0) throw std::invalid_argument("simulate: beta must be >= 0");
  if (beta == 0) {
    res.foggy = scene.clear;
    res.t = ScalarMap::constant(scene.clear.height(), scene.clear.width(), 1.0);
    res.t_hat = res.t;
    res.regime = FogRegime::Clear;
    return res;
  }
  if (beta < kMinFogBeta) {
    std::cerr << "warning: beta=" << beta << " is below the fog bound " << kMinFogBeta
              << " (MOR > 1 km); output tagged mist\n";
    res.regime = FogRegime::Mist;
  } else {
    res.regime = FogRegime::Fog;
  }

  res.t_hat = transmittance_from_distance(prepared.distance, beta);
  res.t = dbf_grid(res.t_hat, prepared.lab, scene.labels, params.filter, params.grid);
  res.foggy = synthesize_fog(scene.clear, res.t, prepared.light);
  return res;
}

SimulationResult simulate(const LabeledScene& scene, Scalar beta,
                          const SimulationParams& params) {
  if (beta == 0) {
    // Clear-weather passthrough needs no depth completion.
    SimulationResult res;
    res.foggy = scene.clear;
    res.t = ScalarMap::constant(scene.clear.height(), scene.clear.width(), 1.0);
    res.t_hat = res.t;
    res.distance = ScalarMap(scene.clear.height(), scene.clear.width());
    res.regime = FogRegime::Clear;
    res.light = params.fixed_light ? *params.fixed_light : Vec3::Ones();
    return res;
  }
  return simulate_prepared(prepare_scene(scene, params), beta, params);
}

}  // namespace fog
