#include "fog/color.hpp"

#include <cmath>

namespace fog {

namespace {

// D65 reference white in XYZ, Y normalized to 1.
constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

inline double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

inline double lab_f(double t) {
  constexpr double cube = (6.0 / 29.0) * (6.0 / 29.0) * (6.0 / 29.0);
  return t > cube ? std::cbrt(t) : t / (3.0 * (6.0 / 29.0) * (6.0 / 29.0)) + 4.0 / 29.0;
}

inline double lab_f_inv(double ft) {
  constexpr double d = 6.0 / 29.0;
  return ft > d ? ft * ft * ft : 3.0 * d * d * (ft - 4.0 / 29.0);
}

}  // namespace

Vec3 rgb_to_lab(const Vec3& rgb) {
  const double rl = srgb_to_linear(rgb[0]);
  const double gl = srgb_to_linear(rgb[1]);
  const double bl = srgb_to_linear(rgb[2]);

  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;

  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);

  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Vec3 lab_to_rgb(const Vec3& lab) {
  const double fy = (lab[0] + 16.0) / 116.0;
  const double fx = fy + lab[1] / 500.0;
  const double fz = fy - lab[2] / 200.0;

  const double x = kXn * lab_f_inv(fx);
  const double y = kYn * lab_f_inv(fy);
  const double z = kZn * lab_f_inv(fz);

  const double rl = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
  const double gl = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
  const double bl = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;

  auto clamp01 = [](double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); };
  return {clamp01(linear_to_srgb(rl)), clamp01(linear_to_srgb(gl)),
          clamp01(linear_to_srgb(bl))};
}

LabImage rgb_to_lab(const RgbImage& img) {
  LabImage out(img.height(), img.width());
  for (Eigen::Index x = 0; x < img.width(); ++x) {
    for (Eigen::Index y = 0; y < img.height(); ++y) {
      const Vec3 lab = rgb_to_lab(img.at(y, x));
      out.L(y, x) = lab[0];
      out.a(y, x) = lab[1];
      out.b(y, x) = lab[2];
    }
  }
  return out;
}

RgbImage lab_to_rgb(const LabImage& lab) {
  RgbImage out(lab.height(), lab.width());
  for (Eigen::Index x = 0; x < lab.width(); ++x) {
    for (Eigen::Index y = 0; y < lab.height(); ++y) {
      out.set(y, x, lab_to_rgb(Vec3(lab.L(y, x), lab.a(y, x), lab.b(y, x))));
    }
  }
  return out;
}

Scalar mor_to_beta(Scalar mor_m) {
  if (!(mor_m > 0.0)) throw std::domain_error("mor_to_beta: MOR must be positive");
  return kMorNumerator / mor_m;
}

Scalar beta_to_mor(Scalar beta) {
  if (!(beta > 0.0)) throw std::domain_error("beta_to_mor: beta must be positive");
  return kMorNumerator / beta;
}

}  // namespace fog
