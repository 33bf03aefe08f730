#include "fog/toy.hpp"

#include "fog/color.hpp"
#include "fog/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace fog {

namespace {

constexpr double kCamHeight = 1.5;  // meters above the road

struct Box {
  int cls = 0;
  double dist = 0;  // meters
  Eigen::Index x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  Vec3 color = Vec3::Zero();
  bool floor_stripes = false;
};

double ground_distance(double row, double horizon, double focal) {
  const double drop = row - horizon;
  if (drop <= 0) return 1000.0;
  return std::min(1000.0, std::max(2.0, kCamHeight * focal / drop));
}

}  // namespace

ToyScene make_toy_scene(uint64_t seed, int width, int height) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0x1234u);
  auto uni = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto uni_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto log_uni = [&](double lo, double hi) { return std::exp(uni(std::log(lo), std::log(hi))); };

  const double focal = 4.0 * width;  // 512 px at the default size
  const double baseline = 0.4;
  const double horizon = height * uni(0.28, 0.46);

  ToyScene toy;
  RgbImage img(height, width);
  SemanticLabeling labels(height, width, kToyClassCount);
  labels.instance_aware = true;
  ScalarMap dist(height, width);

  // Background: sky above the horizon, ground plane below. Most of the sky
  // stays blue; a narrow band right above the horizon brightens to a warm
  // near-white, much like a fog veil.
  const Vec3 sky_top(0.60, 0.70, 0.86);
  const Vec3 sky_low(0.88, 0.87, 0.855);
  const Vec3 road_base(0.32 + uni(-0.02, 0.02), 0.32, 0.33);
  for (Eigen::Index x = 0; x < width; ++x) {
    for (Eigen::Index y = 0; y < height; ++y) {
      if (y < horizon) {
        const double f = std::pow(y / std::max(1.0, horizon), 4.0);
        img.set(y, x, sky_top + f * (sky_low - sky_top));
        labels.ids(y, x) = kToySky;
        dist.values(y, x) = 1000.0;
      } else {
        img.set(y, x, road_base);
        labels.ids(y, x) = kToyRoad;
        dist.values(y, x) = ground_distance(y, horizon, focal);
      }
    }
  }

  // Free-standing objects, far to near so nearer ones occlude.
  std::vector<Box> boxes;
  const int nb = uni_int(2, 4);
  for (int i = 0; i < nb; ++i) {
    Box b;
    b.cls = kToyBuilding;
    b.dist = log_uni(25.0, 320.0);
    const double base_row = horizon + kCamHeight * focal / b.dist;
    const double wpx = std::clamp(uni(8.0, 26.0) * focal / b.dist, 5.0, width * 0.45);
    const double hpx = std::clamp(uni(9.0, 30.0) * focal / b.dist, 6.0, height * 0.9);
    b.x0 = static_cast<Eigen::Index>(uni(0.0, width - wpx));
    b.x1 = std::min<Eigen::Index>(width - 1, b.x0 + static_cast<Eigen::Index>(wpx));
    b.y1 = std::min<Eigen::Index>(height - 1, static_cast<Eigen::Index>(base_row));
    b.y0 = std::max<Eigen::Index>(0, b.y1 - static_cast<Eigen::Index>(hpx));
    b.color = Vec3(0.46 + uni(-0.08, 0.12), 0.36 + uni(-0.08, 0.10), 0.30 + uni(-0.06, 0.10));
    b.floor_stripes = true;
    boxes.push_back(b);
  }
  const int np = uni_int(2, 5);
  for (int i = 0; i < np; ++i) {
    Box b;
    b.cls = kToyPole;
    b.dist = log_uni(8.0, 120.0);
    const double base_row = horizon + kCamHeight * focal / b.dist;
    const double hpx = std::clamp(uni(4.0, 6.5) * focal / b.dist, 4.0, height * 0.8);
    b.x0 = uni_int(2, width - 3);
    b.x1 = std::min<Eigen::Index>(width - 1, b.x0 + (b.dist < 30 ? 1 : 0));
    b.y1 = std::min<Eigen::Index>(height - 1, static_cast<Eigen::Index>(base_row));
    b.y0 = std::max<Eigen::Index>(0, b.y1 - static_cast<Eigen::Index>(hpx));
    b.color = Vec3(0.15, 0.15, 0.17) + Vec3::Constant(uni(-0.02, 0.04));
    boxes.push_back(b);
  }
  const int nc = uni_int(1, 3);
  for (int i = 0; i < nc; ++i) {
    Box b;
    b.cls = kToyCar;
    b.dist = log_uni(7.0, 60.0);
    const double base_row = horizon + kCamHeight * focal / b.dist;
    const double wpx = std::clamp(4.2 * focal / b.dist, 3.0, width * 0.35);
    const double hpx = std::clamp(1.6 * focal / b.dist, 2.0, height * 0.4);
    b.x0 = static_cast<Eigen::Index>(uni(0.0, width - wpx));
    b.x1 = std::min<Eigen::Index>(width - 1, b.x0 + static_cast<Eigen::Index>(wpx));
    b.y1 = std::min<Eigen::Index>(height - 1, static_cast<Eigen::Index>(base_row));
    b.y0 = std::max<Eigen::Index>(0, b.y1 - static_cast<Eigen::Index>(hpx));
    const int hue = uni_int(0, 2);
    b.color = Vec3(0.18, 0.18, 0.18);
    b.color[hue] = uni(0.55, 0.85);
    boxes.push_back(b);
  }
  std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) { return a.dist > b.dist; });

  labels.id_to_class = {kToyRoad, kToySky};
  for (const auto& b : boxes) {
    const int id = static_cast<int>(labels.id_to_class.size());
    labels.id_to_class.push_back(b.cls);
    for (Eigen::Index x = b.x0; x <= b.x1; ++x) {
      for (Eigen::Index y = b.y0; y <= b.y1; ++y) {
        Vec3 c = b.color;
        if (b.floor_stripes && (y - b.y0) % 4 == 3) c *= 0.8;
        img.set(y, x, c);
        labels.ids(y, x) = id;
        dist.values(y, x) = b.dist;
      }
    }
  }

  // Pixel noise for a little texture.
  std::normal_distribution<double> noise(0.0, 0.015);
  for (Eigen::Index x = 0; x < width; ++x)
    for (Eigen::Index y = 0; y < height; ++y)
      img.set(y, x, img.at(y, x) + Vec3::Constant(noise(rng)));
  img = img.clamped01();

  toy.scene.clear = img;
  toy.scene.labels = labels;
  toy.scene.camera.focal_length_px = focal;
  toy.scene.camera.baseline_m = baseline;
  toy.scene.camera.principal_point = {width / 2.0, height / 2.0};
  toy.scene.sky_label = kToySky;
  toy.distance = dist;

  const double fb = focal * baseline;
  toy.scene.disparity = ScalarMap(height, width);
  toy.scene.disparity.values = fb / dist.values;
  return toy;
}

RgbImage render_real_fog(const ToyScene& toy, Scalar beta, uint64_t seed) {
  std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dull + 0x5678u);
  std::normal_distribution<double> dnoise(0.0, 0.02);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  const Eigen::Index h = toy.scene.clear.height(), w = toy.scene.clear.width();

  // Degrade the clean disparity: multiplicative noise, dropout holes and a
  // sprinkle of gross outliers, then run the completion pipeline on it.
  ScalarMap disparity = toy.scene.disparity;
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) {
      const double roll = u01(rng);
      if (roll < 0.08) {
        disparity.valid(y, x) = false;
      } else if (roll < 0.09) {
        disparity.values(y, x) *= 2.0 + 4.0 * u01(rng);
      } else {
        disparity.values(y, x) *= 1.0 + dnoise(rng);
      }
    }
  }

  SimulationParams params;
  const LabImage lab = rgb_to_lab(toy.scene.clear);
  const SuperpixelPartition partition = slic(lab, params.slic);
  const ScalarMap cleaned = detect_outliers(disparity, partition);
  const auto fits = fit_planes(cleaned, partition, params.ransac);
  const ScalarMap distance = complete_depth(cleaned, fits, partition, toy.scene.camera);
  const ScalarMap t = transmittance_from_distance(distance, beta);

  // Real fog reads distinctly warm (R > G > B), unlike the near-neutral
  // sky-derived light the synthetic pipeline estimates; this is the main
  // real-vs-synthetic appearance gap.
  const Vec3 light(0.93 + 0.03 * u01(rng), 0.875 + 0.03 * u01(rng), 0.82 + 0.03 * u01(rng));
  RgbImage foggy = synthesize_fog(toy.scene.clear, t, light);

  std::normal_distribution<double> sensor(0.0, 0.01);
  for (Eigen::Index x = 0; x < w; ++x)
    for (Eigen::Index y = 0; y < h; ++y)
      foggy.set(y, x, foggy.at(y, x) + Vec3::Constant(sensor(rng)));
  return foggy.clamped01();
}

ToyCorpusPaths make_toy_corpus(const ToyCorpusParams& params, const std::string& out_dir) {
  if (params.clear_count < 1) throw std::invalid_argument("toy corpus: need clear scenes");
  const fs::path root(out_dir);
  fs::create_directories(root / "clear");
  fs::create_directories(root / "real");
  fs::create_directories(root / "test");

  char name[64];

  ToyCorpusPaths paths;
  paths.root = root.string();

  const std::string camera_rel = "camera.json";
  bool camera_written = false;

  nlohmann::json clear_json;
  clear_json["num_classes"] = kToyClassCount;
  clear_json["sky_label"] = kToySky;
  clear_json["scenes"] = nlohmann::json::array();
  for (int i = 0; i < params.clear_count; ++i) {
    const ToyScene toy = make_toy_scene(params.seed + static_cast<uint64_t>(i),
                                        params.width, params.height);
    if (!camera_written) {
      write_camera((root / camera_rel).string(), toy.scene.camera);
      camera_written = true;
    }
    std::snprintf(name, sizeof(name), "clear/scene_%04d", i);
    const std::string stem = name;
    write_rgb8((root / (stem + ".png")).string(), toy.scene.clear);
    write_labels((root / (stem + "_labels.png")).string(),
                 (root / (stem + "_labels.json")).string(), toy.scene.labels);
    write_disparity((root / (stem + "_disp.png")).string(), toy.scene.disparity);
    nlohmann::json e;
    e["image"] = stem + ".png";
    e["labels"] = stem + "_labels.png";
    e["labels_sidecar"] = stem + "_labels.json";
    e["disparity"] = stem + "_disp.png";
    e["camera"] = camera_rel;
    clear_json["scenes"].push_back(e);
  }
  paths.clear_corpus = (root / "clear_corpus.json").string();
  write_text_file(paths.clear_corpus, clear_json.dump(2) + "\n");

  auto write_fog_split = [&](const char* split, int count, uint64_t salt,
                             auto&& beta_of) {
    nlohmann::json json;
    json["images"] = nlohmann::json::array();
    for (int i = 0; i < count; ++i) {
      const uint64_t s = params.seed + salt + static_cast<uint64_t>(i);
      const ToyScene toy = make_toy_scene(s, params.width, params.height);
      const double beta = beta_of(i, s);
      const RgbImage foggy = render_real_fog(toy, beta, s);
      std::snprintf(name, sizeof(name), "%s/%s_%04d", split, split, i);
      const std::string stem = name;
      write_rgb8((root / (stem + ".png")).string(), foggy);
      write_labels((root / (stem + "_gt.png")).string(), (root / (stem + "_gt.json")).string(),
                   toy.scene.labels);
      nlohmann::json e;
      e["image"] = stem + ".png";
      e["true_beta"] = beta;
      e["gt_labels"] = stem + "_gt.png";
      e["gt_labels_sidecar"] = stem + "_gt.json";
      json["images"].push_back(e);
    }
    const std::string path = (root / (std::string(split) + "_corpus.json")).string();
    write_text_file(path, json.dump(2) + "\n");
    return path;
  };

  paths.real_corpus = write_fog_split("real", params.real_count, 1000, [&](int i, uint64_t s) {
    std::mt19937_64 rng(s * 0x6a09e667f3bcc909ull);
    return std::uniform_real_distribution<double>(params.real_beta_min,
                                                  params.real_beta_max)(rng);
  });
  paths.test_corpus = write_fog_split("test", params.test_count, 5000,
                                      [&](int, uint64_t) { return params.test_beta; });
  return paths;
}

}  // namespace fog
