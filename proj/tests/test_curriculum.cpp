#include "fog/curriculum.hpp"

#include "fog/io.hpp"
#include "fog/toy.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <filesystem>

using namespace fog;
namespace fs = std::filesystem;

namespace {

// One small corpus on disk, shared across the cases in this file.
struct Fixture {
  ToyCorpusPaths paths;
  ClearCorpus clear;
  RealCorpus real;
  DensityModel density;
};

const Fixture& fixture() {
  static const Fixture fx = [] {
    Fixture f;
    ToyCorpusParams params;
    params.width = 64;
    params.height = 64;
    params.clear_count = 5;
    params.real_count = 10;
    params.test_count = 2;
    params.seed = 42;
    const fs::path dir = fs::temp_directory_path() / "fog_curriculum_fixture";
    fs::remove_all(dir);
    f.paths = make_toy_corpus(params, dir.string());
    f.clear = load_clear_corpus(f.paths.clear_corpus);
    f.real = load_real_corpus(f.paths.real_corpus);

    std::vector<std::pair<FogFeatureVector, Scalar>> samples;
    for (uint64_t s = 0; s < 4; ++s) {
      const ToyScene toy = make_toy_scene(7000 + s, 64, 64);
      const PreparedScene prep = prepare_scene(toy.scene, {});
      for (double beta : {0.0, 0.005, 0.01, 0.02}) {
        const RgbImage img = beta == 0 ? toy.scene.clear : simulate_prepared(prep, beta, {}).foggy;
        samples.emplace_back(extract_features(img), beta);
      }
    }
    f.density = fit_density_model(samples);
    return f;
  }();
  return fx;
}

class ConstantModel : public SegmentationModel {
 public:
  explicit ConstantModel(int label) : label_(label) {}
  SemanticLabeling predict(const RgbImage& img) const override {
    SemanticLabeling out(img.height(), img.width(), kToyClassCount);
    out.ids.setConstant(label_);
    return out;
  }
  void save(const std::string&) const override {}
  void load(const std::string&) override {}

 private:
  int label_;
};

class ConstantClassifier : public WeatherClassifier {
 public:
  explicit ConstantClassifier(int v) : v_(v) {}
  int classify(const RgbImage&) const override { return v_; }

 private:
  int v_;
};

DatasetManifest dummy_manifest(size_t n, const char* prefix) {
  DatasetManifest m;
  for (size_t i = 0; i < n; ++i) {
    ManifestEntry e;
    e.image_path = std::string(prefix) + std::to_string(i) + ".png";
    e.label_path = std::string(prefix) + std::to_string(i) + "_labels.png";
    e.label_sidecar = std::string(prefix) + std::to_string(i) + "_labels.json";
    m.entries.push_back(e);
  }
  return m;
}

}  // namespace

TEST_CASE("schedule validation") {
  CurriculumSchedule ok{.betas = {0.0, 0.005, 0.01}};
  CHECK_NOTHROW(ok.validate());
  CHECK(ok.stages() == 3);
  CHECK(ok.intermediate_domains() == 1);

  CHECK_THROWS(CurriculumSchedule{.betas = {0.0}}.validate());
  CHECK_THROWS(CurriculumSchedule{.betas = {0.001, 0.01}}.validate());
  CHECK_THROWS(CurriculumSchedule{.betas = {0.0, 0.01, 0.01}}.validate());
  CHECK_THROWS(CurriculumSchedule{.betas = {0.0, 0.01, 0.005}}.validate());
}

TEST_CASE("mean iou") {
  SUBCASE("perfect prediction scores 1") {
    SemanticLabeling truth = testutil::blob_labels(3, 16, 16, 3);
    CHECK(mean_iou(truth, truth) == 1.0);
  }

  SUBCASE("hand-counted two-class case") {
    // truth (A,A,B,B), pred (A,B,B,B): IoU_A = 1/2, IoU_B = 2/3.
    SemanticLabeling truth(1, 4, 2), pred(1, 4, 2);
    truth.ids << 0, 0, 1, 1;
    pred.ids << 0, 1, 1, 1;
    CHECK(mean_iou(pred, truth) == doctest::Approx(7.0 / 12.0).epsilon(1e-12));
  }

  SUBCASE("void pixels in truth are ignored") {
    SemanticLabeling truth(1, 4, 2), pred(1, 4, 2);
    truth.ids << 0, kVoidLabel, 1, 1;
    pred.ids << 0, 1, 1, 0;
    // Scored pixels: (0,0), (1,1), (1,0): IoU_0 = 1/2, IoU_1 = 1/2.
    CHECK(mean_iou(pred, truth) == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("all void throws") {
    SemanticLabeling truth(2, 2, 2), pred(2, 2, 2);
    truth.ids.setConstant(kVoidLabel);
    CHECK_THROWS(mean_iou(pred, truth));
  }

  SUBCASE("consistent relabeling leaves the score unchanged") {
    SemanticLabeling truth = testutil::blob_labels(5, 12, 12, 3);
    SemanticLabeling pred = testutil::blob_labels(6, 12, 12, 3);
    const double base = mean_iou(pred, truth);
    auto remap = [](SemanticLabeling l) {
      const int map[3] = {7, 2, 5};
      for (Eigen::Index x = 0; x < l.width(); ++x)
        for (Eigen::Index y = 0; y < l.height(); ++y) l.ids(y, x) = map[l.ids(y, x)];
      return l;
    };
    CHECK(mean_iou(remap(pred), remap(truth)) == doctest::Approx(base).epsilon(1e-12));
  }

  SUBCASE("class subset restricts the mean") {
    SemanticLabeling truth(1, 4, 3), pred(1, 4, 3);
    truth.ids << 0, 0, 1, 2;
    pred.ids << 0, 1, 1, 1;
    MeanIouOptions opts;
    opts.class_subset = std::vector<int>{0, 1};
    // IoU_0 = 1/2, IoU_1 = 1/3; class 2 excluded.
    CHECK(mean_iou(pred, truth, opts) == doctest::Approx((0.5 + 1.0 / 3.0) / 2).epsilon(1e-12));
  }
}

TEST_CASE("mixed stream") {
  const DatasetManifest syn = dummy_manifest(498, "syn_");
  const DatasetManifest real = dummy_manifest(1556, "real_");

  SUBCASE("lambda reproduces the corpus-count arithmetic") {
    MixedStream stream(syn, real, 1.0, 0);
    CHECK(std::abs(stream.lambda() - 3.124) < 1e-3);
  }

  SUBCASE("w = 0 yields a synthetic-only stream") {
    const DatasetManifest none = dummy_manifest(0, "x_");
    MixedStream stream(syn, none, 0.0, 1);
    for (int i = 0; i < 200; ++i) CHECK(stream.next().image_path.starts_with("syn_"));
  }

  SUBCASE("same seed, same sequence") {
    MixedStream a(syn, real, 1.0, 7), b(syn, real, 1.0, 7);
    for (int i = 0; i < 500; ++i) CHECK(a.next().image_path == b.next().image_path);
  }

  SUBCASE("real fraction concentrates around w / (1 + w)") {
    for (double w : {0.5, 1.0, 2.0}) {
      MixedStream stream(syn, real, w, 17);
      const int n = 4000;
      int real_draws = 0;
      for (int i = 0; i < n; ++i)
        if (stream.next().image_path.starts_with("real_")) ++real_draws;
      const double p = w / (1.0 + w);
      const double bound = 3.0 * std::sqrt(p * (1.0 - p) / n);
      CHECK(std::abs(static_cast<double>(real_draws) / n - p) <= bound);
    }
  }

  SUBCASE("invalid configurations throw") {
    const DatasetManifest none = dummy_manifest(0, "x_");
    CHECK_THROWS_AS(MixedStream(none, real, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(MixedStream(syn, none, 1.0, 0), std::invalid_argument);
  }
}

TEST_CASE("toy trainer") {
  const ToyScene a = make_toy_scene(81, 64, 64);
  const ToyScene b = make_toy_scene(82, 64, 64);
  std::vector<TrainSample> data = {{a.scene.clear, a.scene.labels.class_view()},
                                   {b.scene.clear, b.scene.labels.class_view()}};

  ToyTrainer trainer({.num_classes = kToyClassCount, .pixels_per_image = 800, .seed = 3});
  trainer.train(data, 30);

  SUBCASE("loss is non-increasing over epochs") {
    REQUIRE(trainer.loss_history().size() >= 2);
    for (size_t i = 1; i < trainer.loss_history().size(); ++i)
      CHECK(trainer.loss_history()[i] <= trainer.loss_history()[i - 1] + 1e-12);
  }

  SUBCASE("fits its own training scenes reasonably") {
    const SemanticLabeling pred = trainer.predict(a.scene.clear);
    const double miou = mean_iou(pred, a.scene.labels.class_view());
    MESSAGE("train-scene mIoU: ", miou);
    CHECK(miou > 0.35);
  }

  SUBCASE("save, load and clone preserve predictions") {
    const auto path = fs::temp_directory_path() / "fog_toy_trainer_test.txt";
    trainer.save(path.string());
    ToyTrainer loaded;
    loaded.load(path.string());
    const SemanticLabeling p1 = trainer.predict(b.scene.clear);
    const SemanticLabeling p2 = loaded.predict(b.scene.clear);
    CHECK((p1.ids == p2.ids).all());
    CHECK(loaded.state_digest() == trainer.state_digest());

    const auto cloned = trainer.clone();
    CHECK(cloned->state_digest() == trainer.state_digest());
    fs::remove(path);
  }

  SUBCASE("training is deterministic") {
    ToyTrainer other({.num_classes = kToyClassCount, .pixels_per_image = 800, .seed = 3});
    other.train(data, 30);
    CHECK(other.state_digest() == trainer.state_digest());
  }
}

TEST_CASE("stage dataset construction") {
  const Fixture& fx = fixture();
  const CurriculumSchedule schedule{.betas = {0.0, 0.005, 0.01}};

  const fs::path out = fs::temp_directory_path() / "fog_stage_test";
  fs::remove_all(out);

  StageOptions opts;
  opts.out_dir = out.string();
  opts.seed = 1;
  opts.density_model = &fx.density;

  SUBCASE("stage 2 has synthetic data only") {
    const StageDatasets ds = build_stage_datasets(schedule, 2, fx.clear, fx.real, nullptr, opts);
    CHECK(ds.syn.entries.size() == fx.clear.scenes.size());
    CHECK(ds.real.entries.empty());
    for (const auto& e : ds.syn.entries) {
      CHECK(e.origin == ManifestEntry::Origin::Synthetic);
      CHECK(e.beta_d == 0.005);
      CHECK(fs::exists(out / "stage_2" / e.image_path));
    }
    CHECK(fs::exists(out / "stage_2" / "syn_manifest.tsv"));
  }

  SUBCASE("stage 3 filters real images by estimated density and pseudo-labels them") {
    ToyTrainer prev({.num_classes = kToyClassCount, .pixels_per_image = 400, .seed = 9});
    const ToyScene t = make_toy_scene(83, 64, 64);
    prev.train({{t.scene.clear, t.scene.labels.class_view()}}, 10);

    const StageDatasets ds = build_stage_datasets(schedule, 3, fx.clear, fx.real, &prev, opts);
    CHECK(ds.syn.entries.size() == fx.clear.scenes.size());

    size_t expected = 0;
    for (const auto& rec : fx.real.images) {
      const RgbImage img = read_rgb8(rec.image);
      if (predict_density(fx.density, img) <= 0.005) ++expected;
    }
    CHECK(ds.real.entries.size() == expected);
    CHECK(expected > 0);

    for (const auto& e : ds.real.entries) {
      CHECK(e.origin == ManifestEntry::Origin::Real);
      CHECK(e.beta_l <= 0.005);
      const SemanticLabeling pseudo = read_labels((out / "stage_3" / e.label_path).string(),
                                                  (out / "stage_3" / e.label_sidecar).string());
      const RgbImage img = read_rgb8((out / "stage_3" / e.image_path).string());
      CHECK((pseudo.ids == prev.predict(img).ids).all());
    }
  }

  SUBCASE("densified stage writes new images with mapped targets") {
    CurriculumSchedule plus = schedule;
    plus.densify_enabled = true;
    DistanceHistogram hist;
    hist.centers = {30.0, 120.0};
    hist.frequencies = {0.5, 0.5};
    opts.histogram = &hist;

    ToyTrainer prev({.num_classes = kToyClassCount, .pixels_per_image = 400, .seed = 9});
    const ToyScene t = make_toy_scene(84, 64, 64);
    prev.train({{t.scene.clear, t.scene.labels.class_view()}}, 10);

    const StageDatasets ds = build_stage_datasets(plus, 3, fx.clear, fx.real, &prev, opts);
    for (const auto& e : ds.real.entries) {
      CHECK(e.origin == ManifestEntry::Origin::RealDensified);
      CHECK(e.beta_d >= 0.005);
      CHECK(e.beta_d <= 0.01);
      CHECK(e.beta_d == map_target_beta(e.beta_l, 0.005, 0.01));
      CHECK(fs::exists(out / "stage_3" / e.image_path));
    }
  }

  SUBCASE("out-of-range stages and missing inputs throw") {
    CHECK_THROWS_AS(build_stage_datasets(schedule, 1, fx.clear, fx.real, nullptr, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_stage_datasets(schedule, 4, fx.clear, fx.real, nullptr, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_stage_datasets(schedule, 3, fx.clear, fx.real, nullptr, opts),
                    std::invalid_argument);  // no previous model
    ClearCorpus empty;
    CHECK_THROWS_AS(build_stage_datasets(schedule, 2, empty, fx.real, nullptr, opts),
                    std::invalid_argument);
  }

  SUBCASE("an unreachable density threshold empties the real set") {
    // A model that estimates every image far above beta_2 leaves nothing to
    // select.
    DensityModel high;
    high.weights = VecX::Zero(7);
    high.bias = 1.0;
    high.feature_mean = VecX::Zero(7);
    high.feature_std = VecX::Ones(7);
    high.beta_levels = {0.0, 0.01};
    StageOptions high_opts = opts;
    high_opts.density_model = &high;

    ToyTrainer prev({.num_classes = kToyClassCount, .pixels_per_image = 400, .seed = 9});
    const ToyScene t = make_toy_scene(85, 64, 64);
    prev.train({{t.scene.clear, t.scene.labels.class_view()}}, 5);
    const StageDatasets ds = build_stage_datasets(schedule, 3, fx.clear, fx.real, &prev, high_opts);
    CHECK(ds.real.entries.empty());
  }

  SUBCASE("rebuilding produces byte-identical manifests") {
    const fs::path out_a = fs::temp_directory_path() / "fog_stage_rep_a";
    const fs::path out_b = fs::temp_directory_path() / "fog_stage_rep_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    StageOptions oa = opts, ob = opts;
    oa.out_dir = out_a.string();
    ob.out_dir = out_b.string();
    const StageDatasets first = build_stage_datasets(schedule, 2, fx.clear, fx.real, nullptr, oa);
    const StageDatasets second = build_stage_datasets(schedule, 2, fx.clear, fx.real, nullptr, ob);
    CHECK(read_text_file((out_a / "stage_2" / "syn_manifest.tsv").string()) ==
          read_text_file((out_b / "stage_2" / "syn_manifest.tsv").string()));
    REQUIRE_FALSE(first.syn.entries.empty());
    CHECK(digest_file((out_a / "stage_2" / first.syn.entries[0].image_path).string()) ==
          digest_file((out_b / "stage_2" / second.syn.entries[0].image_path).string()));
  }
}

TEST_CASE("model selection") {
  const ToyScene toy = make_toy_scene(91, 48, 48);
  const ConstantModel clear_model(kToyRoad), fog_model(kToySky);

  const SemanticLabeling with_clear =
      model_select(clear_model, fog_model, ConstantClassifier(1), toy.scene.clear);
  CHECK((with_clear.ids == kToyRoad).all());

  const SemanticLabeling with_fog =
      model_select(clear_model, fog_model, ConstantClassifier(0), toy.scene.clear);
  CHECK((with_fog.ids == kToySky).all());
}

TEST_CASE("curriculum runs end to end") {
  const Fixture& fx = fixture();

  CmadaOptions options;
  options.seed = 5;
  options.epochs_per_stage = 8;
  options.trainer_factory = [] {
    return std::make_unique<ToyTrainer>(
        ToyTrainer::Config{.num_classes = kToyClassCount, .pixels_per_image = 400, .seed = 11});
  };

  SUBCASE("zero epochs returns the initial model unchanged") {
    const fs::path out = fs::temp_directory_path() / "fog_cmada_zero";
    fs::remove_all(out);
    CmadaOptions o = options;
    o.out_dir = out.string();
    o.epochs_per_stage = 0;
    const CurriculumSchedule schedule{.betas = {0.0, 0.01}};
    const CmadaResult res = run_cmada(schedule, fx.clear, fx.real, fx.density, o);
    const auto fresh = o.trainer_factory();
    CHECK(res.model->state_digest() == fresh->state_digest());
  }

  SUBCASE("single-stage schedule reproduces a direct stage-2 build") {
    const fs::path out = fs::temp_directory_path() / "fog_cmada_single";
    const fs::path direct = fs::temp_directory_path() / "fog_cmada_direct";
    fs::remove_all(out);
    fs::remove_all(direct);

    CmadaOptions o = options;
    o.out_dir = out.string();
    const CurriculumSchedule schedule{.betas = {0.0, 0.01}};
    const CmadaResult res = run_cmada(schedule, fx.clear, fx.real, fx.density, o);
    CHECK(res.stages.size() == 2);
    CHECK(res.stages[1].real_count == 0);

    StageOptions so;
    so.out_dir = direct.string();
    so.seed = o.seed;
    so.density_model = &fx.density;
    build_stage_datasets(schedule, 2, fx.clear, fx.real, nullptr, so);

    CHECK(read_text_file((out / "stage_2" / "syn_manifest.tsv").string()) ==
          read_text_file((direct / "stage_2" / "syn_manifest.tsv").string()));
  }

  SUBCASE("multi-stage run produces checkpoints, reports and evaluations") {
    const fs::path out = fs::temp_directory_path() / "fog_cmada_multi";
    fs::remove_all(out);

    // Tiny labeled eval set from the test split.
    const RealCorpus test = load_real_corpus(fixture().paths.test_corpus);
    std::vector<TrainSample> eval;
    for (const auto& rec : test.images)
      eval.push_back({read_rgb8(rec.image),
                      read_labels(*rec.gt_labels_png, *rec.gt_labels_sidecar).class_view()});

    CmadaOptions o = options;
    o.out_dir = out.string();
    o.eval_set = &eval;
    const CurriculumSchedule schedule{.betas = {0.0, 0.005, 0.01}};
    const CmadaResult res = run_cmada(schedule, fx.clear, fx.real, fx.density, o);

    REQUIRE(res.stages.size() == 3);
    for (const auto& s : res.stages) {
      CHECK(fs::exists(s.checkpoint));
      REQUIRE(s.miou.has_value());
      CHECK(*s.miou >= 0.0);
      CHECK(*s.miou <= 1.0);
    }
    CHECK(res.stages[2].lambda >= 0.0);
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "report.txt"));
  }
}
