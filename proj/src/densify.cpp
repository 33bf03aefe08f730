#include "fog/densify.hpp"

#include "fog/io.hpp"

#include <cmath>
#include <sstream>

namespace fog {

namespace {
constexpr double kRangeMin = 2.0;
constexpr double kRangeMax = 1000.0;
}  // namespace

void DistanceHistogram::validate() const {
  if (centers.empty() || centers.size() != frequencies.size())
    throw std::invalid_argument("distance histogram: empty or mismatched bins");
  double total = 0;
  for (size_t i = 0; i < centers.size(); ++i) {
    if (!(centers[i] > 0)) throw std::invalid_argument("distance histogram: centers must be > 0");
    if (i > 0 && !(centers[i] > centers[i - 1]))
      throw std::invalid_argument("distance histogram: centers must be strictly increasing");
    if (frequencies[i] < 0) throw std::invalid_argument("distance histogram: negative frequency");
    total += frequencies[i];
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("distance histogram: frequencies must sum to 1");
}

DistanceHistogram build_distance_histogram(const std::vector<ScalarMap>& distance_maps,
                                           int bins) {
  if (distance_maps.empty())
    throw std::invalid_argument("build_distance_histogram: need at least one map");
  if (bins < 1) throw std::invalid_argument("build_distance_histogram: bins must be >= 1");

  const double log_lo = std::log(kRangeMin), log_hi = std::log(kRangeMax);
  const double step = (log_hi - log_lo) / bins;

  DistanceHistogram hist;
  hist.centers.resize(static_cast<size_t>(bins));
  hist.frequencies.assign(static_cast<size_t>(bins), 0.0);
  for (int i = 0; i < bins; ++i)  // geometric center of each log-spaced bin
    hist.centers[static_cast<size_t>(i)] = std::exp(log_lo + (i + 0.5) * step);

  int64_t total = 0;
  for (const auto& map : distance_maps) {
    for (Eigen::Index x = 0; x < map.width(); ++x) {
      for (Eigen::Index y = 0; y < map.height(); ++y) {
        if (!map.valid(y, x)) continue;
        const double l = std::min(kRangeMax, std::max(kRangeMin, map.values(y, x)));
        int bin = static_cast<int>((std::log(l) - log_lo) / step);
        bin = std::min(bins - 1, std::max(0, bin));
        hist.frequencies[static_cast<size_t>(bin)] += 1.0;
        ++total;
      }
    }
  }
  if (total == 0) throw std::invalid_argument("build_distance_histogram: no valid pixels");
  for (auto& f : hist.frequencies) f /= static_cast<double>(total);
  return hist;
}

Scalar expected_transmittance(const DistanceHistogram& hist, Scalar beta) {
  if (beta < 0) throw std::invalid_argument("expected_transmittance: beta must be >= 0");
  hist.validate();
  double t = 0;
  for (size_t i = 0; i < hist.centers.size(); ++i)
    t += hist.frequencies[i] * std::exp(-beta * hist.centers[i]);
  return t;
}

RgbImage densify_with_transmittance(const RgbImage& foggy, Scalar t_l, Scalar t_d,
                                    const Vec3& light) {
  if (!(t_l > 0) || !(t_d > 0))
    throw std::invalid_argument("densify: transmittances must be positive");
  if (t_d > t_l) throw std::invalid_argument("densify: target must not be lighter than input");

  const Scalar ratio = t_d / t_l;
  RgbImage out(foggy.height(), foggy.width());
  out.r = ratio * foggy.r + (1.0 - ratio) * light[0];
  out.g = ratio * foggy.g + (1.0 - ratio) * light[1];
  out.b = ratio * foggy.b + (1.0 - ratio) * light[2];
  return out.clamped01();
}

DensifyResult densify_image(const RgbImage& foggy, Scalar beta_l, Scalar beta_d,
                            const DistanceHistogram& hist, const Vec3& light) {
  if (beta_l < 0) throw std::invalid_argument("densify_image: beta_l must be >= 0");
  if (beta_d < beta_l) throw std::invalid_argument("densify_image: beta_d must be >= beta_l");

  DensifyResult res;
  res.t_l = expected_transmittance(hist, beta_l);
  res.t_d = beta_d == beta_l ? res.t_l : expected_transmittance(hist, beta_d);
  res.image = densify_with_transmittance(foggy, res.t_l, res.t_d, light);
  return res;
}

Scalar map_target_beta(Scalar beta_l, Scalar beta_prev, Scalar beta_next) {
  if (!(beta_prev > 0)) throw std::invalid_argument("map_target_beta: beta_prev must be > 0");
  if (!(beta_prev < beta_next))
    throw std::invalid_argument("map_target_beta: beta_prev must be < beta_next");
  if (beta_l < 0 || beta_l > beta_prev)
    throw std::invalid_argument("map_target_beta: beta_l must lie in [0, beta_prev]");
  // Ratio form lands exactly on both endpoints.
  return beta_prev + (beta_l / beta_prev) * (beta_next - beta_prev);
}

void DistanceHistogram::save(const std::string& path) const {
  validate();
  std::ostringstream out;
  out << "fog-distance-histogram 1\n";
  out << "bins " << centers.size() << "\n";
  for (size_t i = 0; i < centers.size(); ++i)
    out << format_double(centers[i]) << " " << format_double(frequencies[i]) << "\n";
  write_text_file(path, out.str());
}

DistanceHistogram DistanceHistogram::load(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "fog-distance-histogram" || version != 1)
    throw std::runtime_error(path + ": not a fog-distance-histogram v1");
  size_t bins = 0;
  in >> tag >> bins;
  DistanceHistogram hist;
  hist.centers.resize(bins);
  hist.frequencies.resize(bins);
  for (size_t i = 0; i < bins; ++i) in >> hist.centers[i] >> hist.frequencies[i];
  if (!in) throw std::runtime_error(path + ": truncated histogram file");
  hist.validate();
  return hist;
}

}  // namespace fog
