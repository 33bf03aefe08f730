#pragma once

#include "fog/types.hpp"

#include <string>
#include <vector>

namespace fog {

// Scene-distance statistics: log-spaced bins with relative frequencies.
struct DistanceHistogram {
  std::vector<Scalar> centers;      // bin centers, strictly increasing, meters
  std::vector<Scalar> frequencies;  // nonnegative, sum to 1

  void validate() const;
  void save(const std::string& path) const;
  static DistanceHistogram load(const std::string& path);
};

// Histogram over all valid pixels of the given distance maps; N log-spaced
// bins spanning [2, 1000] m, out-of-range values clamped into the end bins.
DistanceHistogram build_distance_histogram(const std::vector<ScalarMap>& distance_maps,
                                           int bins = 64);

// t = sum_i p_i * exp(-beta * l_i): the transmittance of a scene whose
// distances follow the histogram, under the constant-transmittance assumption.
Scalar expected_transmittance(const DistanceHistogram& hist, Scalar beta);

// I_d(x) = (t_d / t_l) I_l(x) + (1 - t_d / t_l) L, computed without
// recovering the clear radiance.
RgbImage densify_with_transmittance(const RgbImage& foggy, Scalar t_l, Scalar t_d,
                                    const Vec3& light);

struct DensifyResult {
  RgbImage image;
  Scalar t_l = 1, t_d = 1;
};

// Densifies fog from estimated level beta_l to target beta_d (>= beta_l)
// using histogram-derived global transmittances.
DensifyResult densify_image(const RgbImage& foggy, Scalar beta_l, Scalar beta_d,
                            const DistanceHistogram& hist, const Vec3& light);

// Linear mapping of estimated density from [0, beta_prev] onto
// [beta_prev, beta_next]; requires 0 <= beta_l <= beta_prev < beta_next.
Scalar map_target_beta(Scalar beta_l, Scalar beta_prev, Scalar beta_next);

}  // namespace fog
