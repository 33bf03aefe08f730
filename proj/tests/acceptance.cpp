// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Everything is seeded; tolerances are fixed here in code.

#include "fog/color.hpp"
#include "fog/curriculum.hpp"
#include "fog/density.hpp"
#include "fog/densify.hpp"
#include "fog/depth.hpp"
#include "fog/io.hpp"
#include "fog/optics.hpp"
#include "fog/toy.hpp"

#include "test_util.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace fog;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, const char* name, bool ok, const std::string& detail) {
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << criterion << ": " << name << " ("
            << detail << ")\n"
            << std::flush;
  if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct FilterInstance {
  ScalarMap t_hat;
  LabImage lab;
  SemanticLabeling labels;
};

FilterInstance random_instance(uint64_t seed, Eigen::Index n) {
  FilterInstance inst;
  inst.t_hat = testutil::smooth_transmittance(seed, n, n);
  inst.lab = rgb_to_lab(testutil::smooth_image(seed + 501, n, n));
  inst.labels = testutil::blob_labels(seed + 887, n, n, 3);
  return inst;
}

// Brute-force reference for Eq.-style dual-reference weights; kept separate
// from the library implementation on purpose.
ScalarMap reference_filter(const FilterInstance& in, const FilterParams& p) {
  const Eigen::Index h = in.t_hat.height(), w = in.t_hat.width();
  const int r = p.effective_radius();
  ScalarMap out(h, w);
  for (Eigen::Index py = 0; py < h; ++py) {
    for (Eigen::Index px = 0; px < w; ++px) {
      long double num = 0, den = 0;
      for (Eigen::Index qy = std::max<Eigen::Index>(0, py - r);
           qy <= std::min<Eigen::Index>(h - 1, py + r); ++qy) {
        for (Eigen::Index qx = std::max<Eigen::Index>(0, px - r);
             qx <= std::min<Eigen::Index>(w - 1, px + r); ++qx) {
          const double spatial_sq =
              static_cast<double>((qx - px) * (qx - px) + (qy - py) * (qy - py));
          const double gs = std::exp(-spatial_sq / (2.0 * p.sigma_s * p.sigma_s));
          const double dl = in.lab.L(qy, qx) - in.lab.L(py, px);
          const double da = in.lab.a(qy, qx) - in.lab.a(py, px);
          const double db = in.lab.b(qy, qx) - in.lab.b(py, px);
          const double gc =
              std::exp(-(dl * dl + da * da + db * db) / (2.0 * p.sigma_c * p.sigma_c));
          const double delta = in.labels.ids(qy, qx) == in.labels.ids(py, px) ? 1.0 : 0.0;
          const double wgt = gs * (delta + p.mu * gc);
          num += static_cast<long double>(wgt) * in.t_hat.values(qy, qx);
          den += wgt;
        }
      }
      out.values(py, px) = static_cast<double>(num / den);
    }
  }
  return out;
}

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_mean = 0, worst_max = 0, worst_oracle = 0;
  bool ok = true;
  for (int i = 0; i < 20; ++i) {
    const FilterInstance inst = random_instance(1000 + static_cast<uint64_t>(i) * 17, 64);
    const ScalarMap direct = dbf_direct(inst.t_hat, inst.lab, inst.labels, {});
    const ScalarMap grid = dbf_grid(inst.t_hat, inst.lab, inst.labels, {});
    const ScalarMap oracle = reference_filter(inst, {});

    const double mean_err = (grid.values - direct.values).abs().mean();
    const double max_err = (grid.values - direct.values).abs().maxCoeff();
    const double oracle_err = (direct.values - oracle.values).abs().maxCoeff();
    worst_mean = std::max(worst_mean, mean_err);
    worst_max = std::max(worst_max, max_err);
    worst_oracle = std::max(worst_oracle, oracle_err);
    ok = ok && mean_err <= 0.02 && max_err <= 0.08 && oracle_err <= 1e-12;
  }
  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 60.0;
  std::ostringstream detail;
  detail << "20 instances, grid-vs-direct mean<=" << worst_mean << " max<=" << worst_max
         << ", direct-vs-oracle<=" << worst_oracle << ", " << elapsed << "s";
  report(1, "filter oracle equivalence", ok, detail.str());
}

void criterion_2() {
  // Piecewise-constant input aligned to the labels, mu = 0: the semantic term
  // alone must reproduce the input bit for bit (region constants are exactly
  // representable).
  const Eigen::Index n = 48;
  FilterInstance inst;
  inst.labels = testutil::blob_labels(4242, n, n, 4);
  inst.lab = rgb_to_lab(testutil::smooth_image(17, n, n));
  inst.t_hat = ScalarMap(n, n);
  const double level[4] = {0.125, 0.25, 0.5, 1.0};
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y)
      inst.t_hat.values(y, x) = level[inst.labels.ids(y, x)];

  FilterParams p;
  p.mu = 0;
  const ScalarMap direct = dbf_direct(inst.t_hat, inst.lab, inst.labels, p);
  const ScalarMap grid = dbf_grid(inst.t_hat, inst.lab, inst.labels, p);
  const bool direct_exact = (direct.values == inst.t_hat.values).all();
  const bool grid_exact = (grid.values == inst.t_hat.values).all();
  report(2, "semantic-edge preservation", direct_exact && grid_exact,
         std::string("bit-exact: direct=") + (direct_exact ? "yes" : "no") +
             " grid=" + (grid_exact ? "yes" : "no"));
}

void criterion_3() {
  const ToyScene toy = make_toy_scene(33, 96, 96);

  // (a) invert the optical model for t.
  const SimulationResult res = simulate(toy.scene, 0.01);
  double worst_t = 0;
  for (Eigen::Index x = 0; x < 96; ++x)
    for (Eigen::Index y = 0; y < 96; ++y) {
      const double r = toy.scene.clear.r(y, x), l = res.light[0];
      if (std::abs(r - l) < 0.05) continue;
      worst_t = std::max(worst_t,
                         std::abs((res.foggy.r(y, x) - l) / (r - l) - res.t.values(y, x)));
    }

  // (b) densification radiance round trip.
  DistanceHistogram hist;
  hist.centers = {40.0, 160.0};
  hist.frequencies = {0.5, 0.5};
  const Vec3 light = Vec3::Constant(0.85);
  const RgbImage radiance = testutil::smooth_image(91, 32, 32);
  const double t_l = expected_transmittance(hist, 0.004);
  RgbImage foggy(32, 32);
  foggy.r = radiance.r * t_l + light[0] * (1 - t_l);
  foggy.g = radiance.g * t_l + light[1] * (1 - t_l);
  foggy.b = radiance.b * t_l + light[2] * (1 - t_l);
  double worst_r = 0;
  for (Eigen::Index x = 0; x < 32; ++x)
    for (Eigen::Index y = 0; y < 32; ++y)
      worst_r = std::max(
          worst_r, std::abs((foggy.g(y, x) - light[1]) / t_l + light[1] - radiance.g(y, x)));

  // (c) beta = 0 is the identity.
  const SimulationResult clear = simulate(toy.scene, 0.0);
  const bool identity = (clear.foggy.r == toy.scene.clear.r).all() &&
                        (clear.foggy.g == toy.scene.clear.g).all() &&
                        (clear.foggy.b == toy.scene.clear.b).all() &&
                        (clear.t.values == 1.0).all();

  const bool ok = worst_t < 1e-6 && worst_r < 1e-6 && identity;
  std::ostringstream detail;
  detail << "t-inversion err " << worst_t << ", radiance err " << worst_r << ", beta=0 identity "
         << (identity ? "yes" : "no");
  report(3, "optics round trips", ok, detail.str());
}

void criterion_4() {
  bool ok = true;
  std::ostringstream detail;

  const double beta_at_1km = mor_to_beta(1000.0);
  ok = ok && std::abs(beta_at_1km - 2.996e-3) <= 1e-15;
  const double mor_at_002 = beta_to_mor(0.02);
  ok = ok && std::abs(mor_at_002 - 149.8) <= 1e-9;

  ok = ok && map_target_beta(0.0, 0.005, 0.01) == 0.005;
  ok = ok && map_target_beta(0.005, 0.005, 0.01) == 0.01;
  ok = ok && std::abs(map_target_beta(0.0025, 0.005, 0.01) - 0.0075) <= 1e-15;
  // linearity across the interval
  bool linear = true;
  for (double f : {0.1, 0.3, 0.7, 0.9}) {
    const double got = map_target_beta(f * 0.005, 0.005, 0.01);
    linear = linear && std::abs(got - (0.005 + f * 0.005)) <= 1e-15;
  }
  ok = ok && linear;

  DistanceHistogram single;
  single.centers = {137.0};
  single.frequencies = {1.0};
  ok = ok && std::abs(expected_transmittance(single, 0.013) - std::exp(-0.013 * 137.0)) <= 1e-12;

  detail << "MOR(1km)->beta=" << beta_at_1km << ", MOR(0.02)=" << mor_at_002
         << " m, mapping endpoints/linearity exact, single-bin transmittance exact";
  report(4, "closed-form checks", ok, detail.str());
}

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> levels = {0.0, 0.005, 0.01, 0.02};
  const int train_scenes = 32, test_scenes = 12;  // 44 scenes x 4 levels

  std::vector<std::pair<FogFeatureVector, Scalar>> train;
  std::vector<double> test_pred_truth_beta;
  std::vector<FogFeatureVector> test_features;
  std::vector<double> test_beta;
  for (int s = 0; s < train_scenes + test_scenes; ++s) {
    const ToyScene toy = make_toy_scene(20000 + static_cast<uint64_t>(s), 128, 128);
    const PreparedScene prep = prepare_scene(toy.scene, {});
    for (double beta : levels) {
      const RgbImage img = beta == 0 ? toy.scene.clear : simulate_prepared(prep, beta, {}).foggy;
      if (s < train_scenes) {
        train.emplace_back(extract_features(img), beta);
      } else {
        test_features.push_back(extract_features(img));
        test_beta.push_back(beta);
      }
    }
  }

  const DensityModel model = fit_density_model(train);
  std::vector<double> pred;
  for (const auto& f : test_features) pred.push_back(predict_density(model, f));

  const double rho = testutil::spearman(pred, test_beta);

  int64_t correct = 0, total = 0;
  for (size_t i = 0; i < pred.size(); ++i)
    for (size_t j = i + 1; j < pred.size(); ++j) {
      if (test_beta[i] == test_beta[j]) continue;
      ++total;
      if ((pred[i] < pred[j]) == (test_beta[i] < test_beta[j])) ++correct;
    }
  const double pairwise = static_cast<double>(correct) / static_cast<double>(total);

  const double elapsed = seconds_since(t0);
  const bool ok = rho >= 0.9 && pairwise >= 0.9 && elapsed < 300.0;
  std::ostringstream detail;
  detail << train.size() << " train / " << pred.size() << " held-out images, spearman " << rho
         << ", pairwise " << pairwise << ", " << elapsed << "s";
  report(5, "density estimator", ok, detail.str());
}

void criterion_6() {
  const Eigen::Index n = 40;
  SuperpixelPartition part;
  part.assignment = ArrayXXi::Zero(n, n);
  part.k = 1;

  int successes = 0;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(777 + static_cast<uint64_t>(trial));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> gross(0.0, 150.0);
    ScalarMap d(n, n);
    for (Eigen::Index x = 0; x < n; ++x)
      for (Eigen::Index y = 0; y < n; ++y)
        d.values(y, x) = u01(rng) < 0.3 ? gross(rng) : 2.0 * x + 3.0 * y + 1.0;

    RansacParams params;
    params.inlier_tol = 1.0;
    params.seed = static_cast<uint64_t>(trial);
    const auto fits = fit_planes(d, part, params);
    const Eigen::Vector3d truth(2.0, 3.0, 1.0);
    const double err = (fits[0].coeffs - truth).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    if (fits[0].status == PlaneFit::Status::Ok && err < 1e-3) ++successes;
  }
  std::ostringstream detail;
  detail << successes << "/100 trials within 1e-3 (worst " << worst << ")";
  report(6, "ransac plane fitting", successes == 100, detail.str());
}

struct CurriculumArtifacts {
  fs::path dir;
  ClearCorpus clear;
  RealCorpus real;
  DensityModel density;
  std::vector<RgbImage> calib_clear, calib_foggy;  // classifier training images
  std::vector<TrainSample> fog_test;
  double miou_baseline = 0, miou_cmada1 = 0, miou_cmada2 = 0, miou_cmada3p = 0;
  std::unique_ptr<TrainableModel> baseline_model, fog_model;
  bool valid = false;
};

CurriculumArtifacts& curriculum_artifacts() {
  static CurriculumArtifacts art;
  return art;
}

void criterion_7() {
  const auto t0 = std::chrono::steady_clock::now();
  CurriculumArtifacts& art = curriculum_artifacts();
  art.dir = fs::temp_directory_path() / "fog_acceptance_curriculum";
  fs::remove_all(art.dir);

  ToyCorpusParams params;
  params.clear_count = 24;
  params.real_count = 80;
  params.test_count = 12;
  params.seed = 0;
  const ToyCorpusPaths paths = make_toy_corpus(params, (art.dir / "corpus").string());
  art.clear = load_clear_corpus(paths.clear_corpus);
  art.real = load_real_corpus(paths.real_corpus);

  // Density estimator trained on the clear corpus at the standard levels;
  // the same images also calibrate the clear/fog classifier.
  {
    std::vector<std::pair<FogFeatureVector, Scalar>> samples;
    for (const auto& rec : art.clear.scenes) {
      const LabeledScene scene = load_scene(rec, art.clear.sky_label);
      const PreparedScene prep = prepare_scene(scene, {});
      for (double beta : {0.0, 0.005, 0.01, 0.02}) {
        const RgbImage img =
            beta == 0 ? scene.clear : simulate_prepared(prep, beta, {}).foggy;
        samples.emplace_back(extract_features(img), beta);
        (beta == 0 ? art.calib_clear : art.calib_foggy).push_back(img);
      }
    }
    art.density = fit_density_model(samples);
  }

  const RealCorpus test = load_real_corpus(paths.test_corpus);
  for (const auto& rec : test.images)
    art.fog_test.push_back({read_rgb8(rec.image),
                            read_labels(*rec.gt_labels_png, *rec.gt_labels_sidecar).class_view()});

  auto run = [&](const CurriculumSchedule& schedule, const char* tag) {
    CmadaOptions options;
    options.out_dir = (art.dir / tag).string();
    options.seed = 0;
    options.epochs_per_stage = 60;
    options.baseline_epochs = 60;
    options.eval_set = &art.fog_test;
    options.trainer_factory = [&] {
      return std::make_unique<ToyTrainer>(ToyTrainer::Config{
          .num_classes = art.clear.num_classes, .pixels_per_image = 1500, .seed = 0});
    };
    return run_cmada(schedule, art.clear, art.real, art.density, options);
  };

  CmadaResult r1 = run({.betas = {0.0, 0.01}}, "cmada1");
  CmadaResult r2 = run({.betas = {0.0, 0.005, 0.01}}, "cmada2");
  CmadaResult r3 = run({.betas = {0.0, 0.0025, 0.005, 0.01}, .densify_enabled = true}, "cmada3p");

  art.miou_baseline = *r1.stages.front().miou;
  art.miou_cmada1 = *r1.stages.back().miou;
  art.miou_cmada2 = *r2.stages.back().miou;
  art.miou_cmada3p = *r3.stages.back().miou;
  art.baseline_model = std::move(r1.baseline);
  art.fog_model = std::move(r3.model);
  art.valid = true;

  const double elapsed = seconds_since(t0);
  const bool ordered = art.miou_cmada3p >= art.miou_cmada2 && art.miou_cmada2 >= art.miou_cmada1 &&
                       art.miou_cmada1 >= art.miou_baseline;
  const bool margin = art.miou_cmada2 - art.miou_baseline >= 0.02;
  const bool ok = ordered && margin && elapsed < 900.0;
  std::ostringstream detail;
  detail << "dense-fog test mIoU: baseline " << art.miou_baseline << " <= CMAda1 "
         << art.miou_cmada1 << " <= CMAda2 " << art.miou_cmada2 << " <= CMAda3+ "
         << art.miou_cmada3p << ", " << elapsed << "s";
  report(7, "curriculum directional analog", ok, detail.str());
}

void criterion_8() {
  DatasetManifest syn, real;
  for (int i = 0; i < 498; ++i) {
    ManifestEntry e;
    e.image_path = "syn_" + std::to_string(i);
    syn.entries.push_back(e);
  }
  for (int i = 0; i < 1556; ++i) {
    ManifestEntry e;
    e.image_path = "real_" + std::to_string(i);
    real.entries.push_back(e);
  }
  MixedStream stream(syn, real, 1.0, 0);
  int real_draws = 0;
  for (int i = 0; i < 10000; ++i)
    if (stream.next().image_path.starts_with("real_")) ++real_draws;
  const double fraction = real_draws / 10000.0;
  const double lambda = stream.lambda();
  const bool ok = std::abs(fraction - 0.5) <= 0.02 && std::abs(lambda - 3.124) <= 1e-3;
  std::ostringstream detail;
  detail << "real fraction " << fraction << " (target 0.50 +/- 0.02), lambda " << lambda
         << " (1556/498)";
  report(8, "stream mixing", ok, detail.str());
}

void criterion_9() {
  CurriculumArtifacts& art = curriculum_artifacts();
  if (!art.valid) {
    report(9, "model selection analog", false, "skipped: criterion 7 artifacts unavailable");
    return;
  }

  // 50/50 mixture: the dense-fog test split plus fresh clear scenes.
  std::vector<TrainSample> mixture = art.fog_test;
  std::vector<bool> is_clear(art.fog_test.size(), false);
  for (int i = 0; i < static_cast<int>(art.fog_test.size()); ++i) {
    const ToyScene toy = make_toy_scene(90000 + static_cast<uint64_t>(i), 128, 128);
    mixture.push_back({toy.scene.clear, toy.scene.labels.class_view()});
    is_clear.push_back(true);
  }

  const double threshold =
      calibrate_clear_fog_threshold(art.density, art.calib_clear, art.calib_foggy);
  const DensityThresholdClassifier g(art.density, threshold);
  int routed_correctly = 0;
  std::ostringstream misroutes;
  IouAccumulator acc_clear, acc_fog, acc_select;
  IouAccumulator half_clear_on_clear, half_clear_on_fog, half_fog_on_clear, half_fog_on_fog;
  for (size_t i = 0; i < mixture.size(); ++i) {
    const auto& sample = mixture[i];
    const int route = g.classify(sample.image);
    if ((route == 1) == is_clear[i]) {
      ++routed_correctly;
    } else {
      misroutes << " [" << (is_clear[i] ? "clear" : "fog") << " #" << i << " estimate "
                << predict_density(art.density, sample.image) << "]";
    }
    const SemanticLabeling from_clear = art.baseline_model->predict(sample.image);
    const SemanticLabeling from_fog = art.fog_model->predict(sample.image);
    acc_clear.add(from_clear, sample.labels);
    acc_fog.add(from_fog, sample.labels);
    (is_clear[i] ? half_clear_on_clear : half_clear_on_fog).add(from_clear, sample.labels);
    (is_clear[i] ? half_fog_on_clear : half_fog_on_fog).add(from_fog, sample.labels);
    acc_select.add(model_select(*art.baseline_model, *art.fog_model, g, sample.image),
                   sample.labels);
  }
  const double miou_clear = acc_clear.mean_iou();
  const double miou_fog = acc_fog.mean_iou();
  const double miou_select = acc_select.mean_iou();
  const double routing = static_cast<double>(routed_correctly) / static_cast<double>(mixture.size());

  const bool ok = miou_select >= std::max(miou_clear, miou_fog) && routing >= 0.95;
  std::ostringstream detail;
  detail << "mixture mIoU: clear-expert " << miou_clear << ", fog-expert " << miou_fog
         << ", model-select " << miou_select << ", routing accuracy " << routing
         << " at threshold " << threshold
         << " [per half: clear-expert " << half_clear_on_clear.mean_iou() << "/"
         << half_clear_on_fog.mean_iou() << ", fog-expert " << half_fog_on_clear.mean_iou() << "/"
         << half_fog_on_fog.mean_iou() << " on clear/fog]" << misroutes.str();
  report(9, "model selection analog", ok, detail.str());
}

// ---- criterion 10: CLI determinism ----------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FOGTOOL_BIN) + " " + args + " 2>>" +
                          (fs::temp_directory_path() / "fog_acceptance_cli.log").string();
  return std::system(cmd.c_str());
}

bool trees_identical(const fs::path& a, const fs::path& b, std::string& mismatch) {
  std::vector<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) {
    mismatch = "file lists differ";
    return false;
  }
  for (const auto& rel : rel_a) {
    if (digest_file((a / rel).string()) != digest_file((b / rel).string())) {
      mismatch = rel.string();
      return false;
    }
  }
  return true;
}

void criterion_10() {
  const fs::path root = fs::temp_directory_path() / "fog_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  bool ok = true;
  std::string detail = "all subcommands byte-identical across reruns";

  auto twice = [&](const char* name, const std::string& args_template) {
    if (!ok) return;  // an earlier step already failed; keep its message
    for (const char* which : {"a", "b"}) {
      std::string args = args_template;
      size_t at;
      while ((at = args.find("{}")) != std::string::npos) args.replace(at, 2, which);
      if (run_cli(args) != 0) {
        ok = false;
        detail = std::string(name) + ": nonzero exit";
        return;
      }
    }
  };
  auto compare = [&](const char* name, const fs::path& a, const fs::path& b) {
    if (!ok) return;
    std::string mismatch;
    if (!trees_identical(a, b, mismatch)) {
      ok = false;
      detail = std::string(name) + ": " + mismatch;
    }
  };

  const std::string r = root.string();

  twice("make-toy-corpus",
        "--seed 3 make-toy-corpus --out " + r + "/corpus_{} --clear 4 --real 6 --test 2 "
        "--width 64 --height 64");
  compare("make-toy-corpus", root / "corpus_a", root / "corpus_b");

  const std::string corpus = r + "/corpus_a/clear_corpus.json";
  const std::string real_list = r + "/corpus_a/real_corpus.json";

  twice("simulate", "--seed 3 simulate --corpus " + corpus + " --beta 0.01 --out " + r +
                        "/sim_{} --hist-out hist.txt");
  compare("simulate", root / "sim_a", root / "sim_b");

  twice("fit-density", "--seed 3 fit-density --corpus " + corpus + " --out " + r +
                           "/density_{}/model.txt");
  compare("fit-density", root / "density_a", root / "density_b");
  const std::string model = r + "/density_a/model.txt";

  twice("estimate-density", "--seed 3 estimate-density --model " + model + " --list " +
                                real_list + " --out " + r + "/est_{}/scores.tsv");
  compare("estimate-density", root / "est_a", root / "est_b");

  twice("rank", "--seed 3 rank --model " + model + " --list " + real_list + " --out " + r +
                    "/rank_{}/ranked.tsv");
  compare("rank", root / "rank_a", root / "rank_b");

  twice("densify", "--seed 3 densify --model " + model + " --hist " + r +
                       "/sim_a/hist.txt --beta-prev 0.005 --beta-next 0.01 --list " + real_list +
                       " --out " + r + "/dense_{}");
  compare("densify", root / "dense_a", root / "dense_b");

  // curriculum-run on a two-domain schedule with few epochs
  {
    std::ostringstream cfg;
    cfg << "{\n  \"schedule\": [0, 0.01],\n  \"w\": 1,\n  \"epochs_per_stage\": 4,\n"
        << "  \"seed\": 3,\n  \"clear_corpus\": \"" << corpus << "\",\n  \"real_corpus\": \""
        << real_list << "\",\n  \"test_corpus\": \"" << r + "/corpus_a/test_corpus.json"
        << "\"\n}\n";
    write_text_file(r + "/run_config.json", cfg.str());
  }
  twice("curriculum-run", "curriculum-run --config " + r + "/run_config.json --out " + r +
                              "/run_{}");
  compare("curriculum-run", root / "run_a", root / "run_b");

  twice("select-model", "--seed 3 select-model --clear-model " + r +
                            "/run_a/model_stage_1.txt --fog-model " + r +
                            "/run_a/model_stage_2.txt --density-model " + model +
                            " --threshold 0.0025 --list " + real_list + " --out " + r +
                            "/select_{}");
  compare("select-model", root / "select_a", root / "select_b");

  // eval-miou over the select-model outputs against the toy ground truth
  if (ok) {
    std::ostringstream pairs;
    const RealCorpus rc = load_real_corpus(real_list);
    for (const auto& rec : rc.images) {
      const std::string stem = fs::path(rec.image).stem().string();
      pairs << (root / "select_a" / (stem + "_labels.png")).string() << "\t"
            << *rec.gt_labels_png << "\n";
    }
    write_text_file(r + "/pairs.tsv", pairs.str());
  }
  twice("eval-miou", "--seed 3 eval-miou --pairs " + r + "/pairs.tsv --out " + r +
                         "/eval_{}/metrics.json");
  compare("eval-miou", root / "eval_a", root / "eval_b");

  report(10, "CLI determinism", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  std::cout << "fog toolkit acceptance suite\n";
  const auto t0 = std::chrono::steady_clock::now();

  // Optional arguments select individual criteria (criterion 9 reuses the
  // artifacts of criterion 7, which runs automatically when needed).
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  auto enabled = [&](int c) {
    return wanted.empty() || std::find(wanted.begin(), wanted.end(), c) != wanted.end();
  };

  if (enabled(1)) criterion_1();
  if (enabled(2)) criterion_2();
  if (enabled(3)) criterion_3();
  if (enabled(4)) criterion_4();
  if (enabled(5)) criterion_5();
  if (enabled(6)) criterion_6();
  if (enabled(7) || enabled(9)) criterion_7();
  if (enabled(8)) criterion_8();
  if (enabled(9)) criterion_9();
  if (enabled(10)) criterion_10();

  std::cout << (failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES PRESENT") << " ("
            << seconds_since(t0) << "s total)\n";
  return failures == 0 ? 0 : 1;
}
