#pragma once

#include "fog/optics.hpp"
#include "fog/types.hpp"

#include <string>

namespace fog {

// Procedurally generated road scenes: ground plane, sky, boxes standing in
// for buildings, poles and cars, all with analytic depth. Classes:
inline constexpr int kToyRoad = 0;
inline constexpr int kToySky = 1;
inline constexpr int kToyBuilding = 2;
inline constexpr int kToyPole = 3;
inline constexpr int kToyCar = 4;
inline constexpr int kToyClassCount = 5;

struct ToyScene {
  LabeledScene scene;   // clear image, instance-aware labels, clean disparity
  ScalarMap distance;   // analytic metric distance (m)
};

ToyScene make_toy_scene(uint64_t seed, int width = 128, int height = 128);

// "Real" fog: the scene's disparity is perturbed (noise, holes, gross
// outliers), completed through the depth pipeline, and composited with a
// brighter atmospheric light plus sensor noise. This path deliberately
// differs from the synthetic-fog pipeline to leave a domain gap.
RgbImage render_real_fog(const ToyScene& toy, Scalar beta, uint64_t seed);

struct ToyCorpusParams {
  int width = 128, height = 128;
  int clear_count = 24;
  int real_count = 80;
  int test_count = 12;
  Scalar real_beta_min = 0.0008;  // plenty of light fog, as in real corpora
  Scalar real_beta_max = 0.010;
  Scalar test_beta = 0.01;
  uint64_t seed = 0;
};

struct ToyCorpusPaths {
  std::string root;
  std::string clear_corpus;  // corpus JSON files
  std::string real_corpus;
  std::string test_corpus;
};

// Writes clear scenes (image + labels + disparity + camera), a real foggy
// split with recorded true densities and held-back ground truth, and a
// dense-fog test split.
ToyCorpusPaths make_toy_corpus(const ToyCorpusParams& params, const std::string& out_dir);

}  // namespace fog
