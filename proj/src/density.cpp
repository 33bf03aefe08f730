#include "fog/density.hpp"

#include "fog/io.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace fog {

namespace {

constexpr int kModelVersion = 1;

ArrayXX channel_min(const RgbImage& img) { return img.r.min(img.g).min(img.b); }

double dark_channel_mean(const ArrayXX& cmin, int window) {
  const int r = window / 2;
  const Eigen::Index h = cmin.rows(), w = cmin.cols();
  double sum = 0;
  // Direct, separable min; images here are small enough.
  ArrayXX tmp(h, w);
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) {
      const Eigen::Index y0 = std::max<Eigen::Index>(0, y - r), y1 = std::min<Eigen::Index>(h - 1, y + r);
      double m = cmin(y0, x);
      for (Eigen::Index yy = y0 + 1; yy <= y1; ++yy) m = std::min(m, cmin(yy, x));
      tmp(y, x) = m;
    }
  }
  for (Eigen::Index x = 0; x < w; ++x) {
    const Eigen::Index x0 = std::max<Eigen::Index>(0, x - r), x1 = std::min<Eigen::Index>(w - 1, x + r);
    for (Eigen::Index y = 0; y < h; ++y) {
      double m = tmp(y, x0);
      for (Eigen::Index xx = x0 + 1; xx <= x1; ++xx) m = std::min(m, tmp(y, xx));
      sum += m;
    }
  }
  return sum / static_cast<double>(h * w);
}

}  // namespace

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = {
      "dark_channel_mean_15", "dark_channel_mean_31", "rms_contrast",
      "michelson_contrast",   "mean_saturation",      "mean_gradient",
      "top_decile_luminance"};
  return names;
}

FogFeatureVector extract_features(const RgbImage& img) {
  const Eigen::Index h = img.height(), w = img.width();
  if (h * w == 0) throw std::invalid_argument("extract_features: empty image");

  const ArrayXX cmin = channel_min(img);
  const ArrayXX cmax = img.r.max(img.g).max(img.b);
  const ArrayXX lum = 0.2126 * img.r + 0.7152 * img.g + 0.0722 * img.b;

  FogFeatureVector f;
  f[0] = dark_channel_mean(cmin, 15);
  f[1] = dark_channel_mean(cmin, 31);

  const double mean_lum = lum.mean();
  f[2] = std::sqrt((lum - mean_lum).square().mean());

  const double lmax = lum.maxCoeff(), lmin = lum.minCoeff();
  f[3] = lmax + lmin > 0 ? (lmax - lmin) / (lmax + lmin) : 0.0;

  f[4] = ((cmax - cmin) / cmax.max(1e-12)).mean();

  double gsum = 0;
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) {
      const double gx = x + 1 < w ? lum(y, x + 1) - lum(y, x) : 0.0;
      const double gy = y + 1 < h ? lum(y + 1, x) - lum(y, x) : 0.0;
      gsum += std::sqrt(gx * gx + gy * gy);
    }
  }
  f[5] = gsum / static_cast<double>(h * w);

  std::vector<double> vals(lum.data(), lum.data() + lum.size());
  const size_t keep = std::max<size_t>(1, vals.size() / 10);
  std::nth_element(vals.begin(), vals.begin() + static_cast<long>(keep - 1), vals.end(),
                   std::greater<>());
  double top = 0;
  for (size_t i = 0; i < keep; ++i) top += vals[i];
  f[6] = top / static_cast<double>(keep);
  return f;
}

DensityModel fit_density_model(const std::vector<std::pair<FogFeatureVector, Scalar>>& samples,
                               Scalar lambda_ridge) {
  if (lambda_ridge < 0) throw std::invalid_argument("fit_density_model: lambda must be >= 0");
  std::set<Scalar> levels;
  for (const auto& [f, beta] : samples) levels.insert(beta);
  if (levels.size() < 2)
    throw std::invalid_argument("fit_density_model: need samples from >= 2 distinct beta levels");

  const auto n = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index dim = samples.front().first.size();

  MatX x(n, dim);
  VecX y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x.row(i) = samples[static_cast<size_t>(i)].first.transpose();
    y[i] = samples[static_cast<size_t>(i)].second;
  }

  DensityModel model;
  model.lambda = lambda_ridge;
  model.beta_levels.assign(levels.begin(), levels.end());
  model.feature_mean = x.colwise().mean();
  VecX var = (x.rowwise() - model.feature_mean.transpose()).array().square().colwise().mean();
  model.feature_std = var.array().sqrt();
  for (Eigen::Index j = 0; j < dim; ++j)
    if (model.feature_std[j] < 1e-12) model.feature_std[j] = 1.0;

  MatX z = (x.rowwise() - model.feature_mean.transpose()).array().rowwise() /
           model.feature_std.transpose().array();

  const Scalar y_mean = y.mean();
  const MatX gram = z.transpose() * z + lambda_ridge * MatX::Identity(dim, dim);
  if (lambda_ridge == 0) {
    Eigen::FullPivLU<MatX> lu(gram);
    if (!lu.isInvertible())
      throw std::runtime_error("fit_density_model: degenerate design matrix with lambda = 0");
    model.weights = lu.solve(z.transpose() * (y.array() - y_mean).matrix());
  } else {
    model.weights = gram.ldlt().solve(z.transpose() * (y.array() - y_mean).matrix());
  }
  model.bias = y_mean;

  const VecX resid = z * model.weights + VecX::Constant(n, model.bias) - y;
  model.training_rmse = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  return model;
}

Scalar predict_density(const DensityModel& model, const FogFeatureVector& features) {
  if (model.weights.size() == 0) throw std::invalid_argument("predict_density: model not fitted");
  const VecX z = (features - model.feature_mean).array() / model.feature_std.array();
  return std::max(0.0, model.weights.dot(z) + model.bias);
}

Scalar predict_density(const DensityModel& model, const RgbImage& img) {
  return predict_density(model, extract_features(img));
}

std::vector<RankedImage> rank_by_density(const DensityModel& model,
                                         const std::vector<FogFeatureVector>& features) {
  std::vector<RankedImage> out(features.size());
  for (size_t i = 0; i < features.size(); ++i) {
    out[i].input_index = i;
    out[i].estimate = predict_density(model, features[i]);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedImage& a, const RankedImage& b) { return a.estimate < b.estimate; });
  const double n = static_cast<double>(out.size());
  for (size_t r = 0; r < out.size(); ++r)
    out[r].percentile = 100.0 * (static_cast<double>(r) + 0.5) / n;
  return out;
}

std::vector<RankedImage> rank_by_density(const DensityModel& model,
                                         const std::vector<RgbImage>& images) {
  std::vector<FogFeatureVector> features;
  features.reserve(images.size());
  for (const auto& img : images) features.push_back(extract_features(img));
  return rank_by_density(model, features);
}

void DensityModel::save(const std::string& path) const {
  std::ostringstream out;
  out << "fog-density-model " << kModelVersion << "\n";
  out << "features " << weights.size() << "\n";
  auto line = [&](const char* name, const VecX& v) {
    out << name;
    for (Eigen::Index i = 0; i < v.size(); ++i) out << " " << format_double(v[i]);
    out << "\n";
  };
  line("weights", weights);
  out << "bias " << format_double(bias) << "\n";
  line("feature_mean", feature_mean);
  line("feature_std", feature_std);
  out << "beta_levels";
  for (Scalar b : beta_levels) out << " " << format_double(b);
  out << "\n";
  out << "lambda " << format_double(lambda) << "\n";
  out << "training_rmse " << format_double(training_rmse) << "\n";
  write_text_file(path, out.str());
}

DensityModel DensityModel::load(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "fog-density-model" || version != kModelVersion)
    throw std::runtime_error(path + ": not a fog-density-model v" + std::to_string(kModelVersion));

  DensityModel m;
  Eigen::Index dim = 0;
  in >> tag >> dim;
  auto read_vec = [&](const char* name) {
    in >> tag;
    if (tag != name) throw std::runtime_error(path + ": expected field " + name);
    VecX v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) in >> v[i];
    return v;
  };
  m.weights = read_vec("weights");
  in >> tag >> m.bias;
  m.feature_mean = read_vec("feature_mean");
  m.feature_std = read_vec("feature_std");
  in >> tag;
  std::string rest;
  std::getline(in, rest);
  std::istringstream lv(rest);
  double b;
  while (lv >> b) m.beta_levels.push_back(b);
  in >> tag >> m.lambda;
  in >> tag >> m.training_rmse;
  if (!in) throw std::runtime_error(path + ": truncated model file");
  return m;
}

}  // namespace fog
