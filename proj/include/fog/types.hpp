#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace fog {

using Scalar = double;

using ArrayXX = Eigen::ArrayXXd;
using ArrayXXi = Eigen::ArrayXXi;
using MaskXX = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Planar RGB raster, channel values in [0,1]. Arrays are (height x width),
// indexed (y, x). Values carry the 8-bit PNG scale divided by 255; no gamma
// transform is applied between disk and memory, so the optical model
// composites on the same values the source images were published with.
struct RgbImage {
  ArrayXX r, g, b;

  RgbImage() = default;
  RgbImage(Eigen::Index height, Eigen::Index width)
      : r(height, width), g(height, width), b(height, width) {}

  Eigen::Index height() const { return r.rows(); }
  Eigen::Index width() const { return r.cols(); }
  Eigen::Index pixels() const { return r.size(); }

  static RgbImage constant(Eigen::Index height, Eigen::Index width, const Vec3& color) {
    RgbImage img(height, width);
    img.r.setConstant(color[0]);
    img.g.setConstant(color[1]);
    img.b.setConstant(color[2]);
    return img;
  }

  Vec3 at(Eigen::Index y, Eigen::Index x) const { return {r(y, x), g(y, x), b(y, x)}; }
  void set(Eigen::Index y, Eigen::Index x, const Vec3& c) {
    r(y, x) = c[0];
    g(y, x) = c[1];
    b(y, x) = c[2];
  }

  RgbImage clamped01() const {
    RgbImage out = *this;
    out.r = out.r.min(1.0).max(0.0);
    out.g = out.g.min(1.0).max(0.0);
    out.b = out.b.min(1.0).max(0.0);
    return out;
  }
};

// CIELAB raster under the D65 reference white: L* in [0,100], a*/b* roughly
// in [-128,127]. Produced from an RgbImage by rgb_to_lab.
struct LabImage {
  ArrayXX L, a, b;

  LabImage() = default;
  LabImage(Eigen::Index height, Eigen::Index width)
      : L(height, width), a(height, width), b(height, width) {}

  Eigen::Index height() const { return L.rows(); }
  Eigen::Index width() const { return L.cols(); }
};

// Per-pixel integer labeling. `ids` holds the raster values; when
// instance_aware, distinct instances of one class carry distinct ids and
// id_to_class collapses them back to semantic classes. kVoidLabel marks
// pixels excluded from training and evaluation.
struct SemanticLabeling {
  ArrayXXi ids;
  int num_classes = 0;
  bool instance_aware = false;
  std::vector<int> id_to_class;  // empty => identity mapping

  SemanticLabeling() = default;
  SemanticLabeling(Eigen::Index height, Eigen::Index width, int classes)
      : ids(ArrayXXi::Zero(height, width)), num_classes(classes) {}

  Eigen::Index height() const { return ids.rows(); }
  Eigen::Index width() const { return ids.cols(); }

  int class_of(int id) const {
    if (id_to_class.empty()) return id;
    if (id < 0 || id >= static_cast<int>(id_to_class.size()))
      throw std::out_of_range("label id " + std::to_string(id) + " not in id_to_class table");
    return id_to_class[static_cast<size_t>(id)];
  }

  // Collapses instance ids to class ids; identity when not instance aware.
  SemanticLabeling class_view() const;
};

inline constexpr int kVoidLabel = 255;

// Scalar field plus validity mask. Hosts disparity, scene distance and
// transmittance; invalid pixels are excluded from all statistics.
struct ScalarMap {
  ArrayXX values;
  MaskXX valid;

  ScalarMap() = default;
  ScalarMap(Eigen::Index height, Eigen::Index width)
      : values(ArrayXX::Zero(height, width)),
        valid(MaskXX::Constant(height, width, true)) {}

  static ScalarMap constant(Eigen::Index height, Eigen::Index width, Scalar v) {
    ScalarMap m(height, width);
    m.values.setConstant(v);
    return m;
  }

  Eigen::Index height() const { return values.rows(); }
  Eigen::Index width() const { return values.cols(); }
  Eigen::Index valid_count() const { return valid.count(); }
  bool fully_valid() const { return valid.all(); }
};

// Attenuation coefficient (1/m) and global atmospheric light.
struct FogParams {
  Scalar beta = 0.0;
  Vec3 atmospheric_light = Vec3::Ones();
};

// Lightest attenuation that still counts as fog: MOR = 1 km.
inline constexpr Scalar kMorNumerator = 2.996;
inline constexpr Scalar kMinFogBeta = 2.996e-3;

inline void require_same_shape(Eigen::Index h1, Eigen::Index w1, Eigen::Index h2,
                               Eigen::Index w2, const char* what) {
  if (h1 != h2 || w1 != w2)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(w1) + "x" + std::to_string(h1) + " vs " +
                                std::to_string(w2) + "x" + std::to_string(h2) + ")");
}

}  // namespace fog
