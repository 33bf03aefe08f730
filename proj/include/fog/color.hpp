#pragma once

#include "fog/types.hpp"

namespace fog {

// sRGB (D65) to CIELAB. Total on [0,1] inputs; dimensions preserved.
LabImage rgb_to_lab(const RgbImage& img);

// Inverse conversion; out-of-gamut results are clamped to [0,1].
RgbImage lab_to_rgb(const LabImage& lab);

Vec3 rgb_to_lab(const Vec3& rgb);
Vec3 lab_to_rgb(const Vec3& lab);

// MOR (meteorological optical range) <-> attenuation coefficient,
// MOR = 2.996 / beta. Both throw std::domain_error on non-positive input.
Scalar mor_to_beta(Scalar mor_m);
Scalar beta_to_mor(Scalar beta);

}  // namespace fog
