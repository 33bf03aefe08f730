#pragma once

#include "fog/types.hpp"

#include <cstdint>

namespace fog {

// Pinhole stereo rig; converts disparity (pixels) to metric distance.
struct CameraModel {
  Scalar focal_length_px = 0.0;
  Scalar baseline_m = 0.0;
  Eigen::Vector2d principal_point = Eigen::Vector2d::Zero();

  void validate() const {
    if (!(focal_length_px > 0.0)) throw std::invalid_argument("camera: focal length must be > 0");
    if (!(baseline_m > 0.0)) throw std::invalid_argument("camera: baseline must be > 0");
  }
};

CameraModel read_camera(const std::string& path);
void write_camera(const std::string& path, const CameraModel& cam);

// SLIC partition: every pixel assigned, indices contiguous 0..k-1, each
// superpixel 4-connected.
struct SuperpixelPartition {
  ArrayXXi assignment;
  int k = 0;

  Eigen::Index height() const { return assignment.rows(); }
  Eigen::Index width() const { return assignment.cols(); }
};

struct SlicParams {
  int k = 0;                // requested superpixel count; 0 => pixels/1024
  Scalar compactness = 10;  // spatial weight m in the SLIC metric
};

// Per-superpixel plane disparity(u,v) = a*u + b*v + c.
struct PlaneFit {
  enum class Status { Ok, Degenerate };
  Eigen::Vector3d coeffs = Eigen::Vector3d::Zero();  // (a, b, c)
  std::vector<uint8_t> inliers;  // refined inlier mask over the superpixel's valid pixels
  int inlier_count = 0;          // consensus size of the RANSAC search
  Status status = Status::Degenerate;

  Scalar eval(Scalar u, Scalar v) const { return coeffs[0] * u + coeffs[1] * v + coeffs[2]; }
};

struct RansacParams {
  int iters = 500;
  Scalar inlier_tol = 1.0;  // disparity units
  int min_inliers = 12;
  uint64_t seed = 0;
};

struct DistanceClamp {
  Scalar min_m = 2.0;
  Scalar max_m = 1000.0;
};

// Clears the validity mask on per-superpixel robust outliers
// (|d - median| > 3 * MAD); never invalidates more than half of a
// superpixel's initially valid pixels.
ScalarMap detect_outliers(const ScalarMap& disparity, const SuperpixelPartition& partition);

// SLIC superpixels on a CIELAB image: 10 k-means iterations with distance
// D = sqrt(d_lab^2 + (d_xy * m / S)^2), S = sqrt(N/k), then connectivity
// enforcement. Deterministic.
SuperpixelPartition slic(const LabImage& lab, const SlicParams& params);

// Per-superpixel RANSAC plane fit over valid pixels with least-squares refit
// on the best inlier set. Degenerate fits are flagged, not thrown.
std::vector<PlaneFit> fit_planes(const ScalarMap& disparity,
                                 const SuperpixelPartition& partition,
                                 const RansacParams& params);

// Fills invalid pixels from their superpixel's plane (nearest non-degenerate
// plane for degenerate superpixels) and converts to metric distance
// l = focal * baseline / disparity, clamped to [clamp.min_m, clamp.max_m].
ScalarMap complete_depth(const ScalarMap& disparity, const std::vector<PlaneFit>& fits,
                         const SuperpixelPartition& partition, const CameraModel& camera,
                         const DistanceClamp& clamp = {});

// t(x) = exp(-beta * l(x)).
ScalarMap transmittance_from_distance(const ScalarMap& distance, Scalar beta);

}  // namespace fog
