#pragma once

#include "fog/types.hpp"

#include <vector>

namespace fog {

// Parameters of the dual-reference cross-bilateral filter. The weight of a
// neighbor q for center p is
//   G_sigma_s(|q - p|) * (delta(h(q) == h(p)) + mu * G_sigma_c(|J(q) - J(p)|))
// with peak-1 Gaussians. window_radius <= 0 selects 3 * sigma_s.
struct FilterParams {
  Scalar mu = 5.0;
  Scalar sigma_s = 20.0;   // pixels
  Scalar sigma_c = 10.0;   // CIELAB units
  int window_radius = 0;

  int effective_radius() const {
    return window_radius > 0 ? window_radius : static_cast<int>(std::ceil(3.0 * sigma_s));
  }
  void validate() const {
    if (mu < 0) throw std::invalid_argument("filter: mu must be >= 0");
    if (!(sigma_s > 0) || !(sigma_c > 0))
      throw std::invalid_argument("filter: sigma_s and sigma_c must be > 0");
    if (effective_radius() < 1) throw std::invalid_argument("filter: window radius must be >= 1");
  }
};

// Grid cell sizes for the fast path; defaults follow sigma/2.
struct GridConfig {
  Scalar spatial_cell = 0;  // <= 0 => sigma_s / 2
  Scalar range_cell = 0;    // <= 0 => sigma_c / 2

  Scalar spatial(const FilterParams& p) const {
    return spatial_cell > 0 ? spatial_cell : p.sigma_s / 2;
  }
  Scalar range(const FilterParams& p) const {
    return range_cell > 0 ? range_cell : p.sigma_c / 2;
  }
};

// Exact evaluation over the square window; the oracle path.
ScalarMap dbf_direct(const ScalarMap& t_hat, const LabImage& lab, const SemanticLabeling& labels,
                     const FilterParams& params);

// Bilateral-grid evaluation: a stack of per-label 2D spatial grids realizes
// the semantic term (the label axis carries no blur; the delta is exact) and
// one 5D spatial x CIELAB grid realizes the color term. Numerators and
// denominators combine as (num3 + mu * num5) / (den3 + mu * den5).
ScalarMap dbf_grid(const ScalarMap& t_hat, const LabImage& lab, const SemanticLabeling& labels,
                   const FilterParams& params, const GridConfig& grid = {});

// Regular lattice of (weighted value, weight) cells used by dbf_grid;
// exposed for tests. Axis 0/1 are y/x in units of `cell_sizes`; higher axes
// are range dimensions. Weights stay nonnegative throughout.
class BilateralGrid {
 public:
  BilateralGrid(std::vector<Eigen::Index> dims, std::vector<Scalar> cell_sizes);

  int dimensionality() const { return static_cast<int>(dims_.size()); }
  const std::vector<Eigen::Index>& dims() const { return dims_; }

  // Multilinear splat of (value * weight, weight) at a continuous grid position.
  void splat(const std::vector<Scalar>& pos, Scalar value, Scalar weight = 1.0);
  // Separable peak-1 Gaussian blur along every axis; sigmas in grid units.
  void blur(const std::vector<Scalar>& sigmas);
  // Multilinear read-back; returns (weighted value sum, weight sum).
  std::pair<Scalar, Scalar> slice(const std::vector<Scalar>& pos) const;

 private:
  std::vector<Eigen::Index> dims_;
  std::vector<Eigen::Index> strides_;
  std::vector<Scalar> cells_;
  std::vector<Scalar> num_, den_;

  Eigen::Index flat(const std::vector<Eigen::Index>& idx) const;
};

}  // namespace fog
