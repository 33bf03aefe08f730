#pragma once

#include "fog/types.hpp"

#include <string>
#include <vector>

namespace fog {

// Handcrafted fog-sensitive statistics; order matches feature_names().
using FogFeatureVector = Eigen::Matrix<Scalar, 7, 1>;

const std::vector<std::string>& feature_names();

// Deterministic feature vector: dark-channel means at two windows, RMS and
// Michelson contrast of the luminance, mean saturation, mean gradient
// magnitude, top-decile luminance.
FogFeatureVector extract_features(const RgbImage& img);

// Ridge regression from standardized features onto beta. Serialized as a
// small versioned flat file.
struct DensityModel {
  VecX weights;
  Scalar bias = 0;
  VecX feature_mean;
  VecX feature_std;
  std::vector<Scalar> beta_levels;  // distinct training levels, ascending
  Scalar lambda = 0;
  Scalar training_rmse = 0;

  void save(const std::string& path) const;
  static DensityModel load(const std::string& path);
};

DensityModel fit_density_model(const std::vector<std::pair<FogFeatureVector, Scalar>>& samples,
                               Scalar lambda_ridge = 1e-3);

// max(0, linear prediction); the estimator maps into the nonnegative reals.
Scalar predict_density(const DensityModel& model, const FogFeatureVector& features);
Scalar predict_density(const DensityModel& model, const RgbImage& img);

struct RankedImage {
  size_t input_index = 0;
  Scalar estimate = 0;
  Scalar percentile = 0;  // midpoint convention, 100 * (rank + 0.5) / n
};

// Stable ascending sort by estimated density; ties keep input order.
std::vector<RankedImage> rank_by_density(const DensityModel& model,
                                         const std::vector<FogFeatureVector>& features);
std::vector<RankedImage> rank_by_density(const DensityModel& model,
                                         const std::vector<RgbImage>& images);

}  // namespace fog
