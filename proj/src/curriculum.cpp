#include "fog/curriculum.hpp"

#include "fog/color.hpp"
#include "fog/io.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace fog {

void CurriculumSchedule::validate() const {
  if (stages() < 2) throw std::invalid_argument("schedule: need at least source and target (Z >= 2)");
  if (betas.front() != 0) throw std::invalid_argument("schedule: beta_1 must be 0 (clear source)");
  for (size_t i = 1; i < betas.size(); ++i)
    if (!(betas[i] > betas[i - 1]))
      throw std::invalid_argument("schedule: betas must be strictly ascending");
  if (w < 0) throw std::invalid_argument("schedule: w must be >= 0");
}

std::string CurriculumSchedule::digest() const {
  std::ostringstream os;
  for (Scalar b : betas) os << format_double(b) << ",";
  os << "|densify=" << densify_enabled << "|w=" << format_double(w);
  return digest_string(os.str());
}

// ---- corpora ------------------------------------------------------------------

namespace {

std::string join_dir(const std::string& dir, const std::string& rel) {
  if (rel.empty() || fs::path(rel).is_absolute()) return rel;
  return (fs::path(dir) / rel).lexically_normal().string();
}

}  // namespace

ClearCorpus load_clear_corpus(const std::string& json_path) {
  const std::string text = read_text_file(json_path);
  nlohmann::json j = nlohmann::json::parse(text);
  const std::string dir = fs::path(json_path).parent_path().string();

  ClearCorpus corpus;
  corpus.num_classes = j.at("num_classes").get<int>();
  if (j.contains("sky_label")) corpus.sky_label = j["sky_label"].get<int>();
  for (const auto& e : j.at("scenes")) {
    SceneRecord rec;
    rec.image = join_dir(dir, e.at("image").get<std::string>());
    rec.labels_png = join_dir(dir, e.at("labels").get<std::string>());
    rec.labels_sidecar = join_dir(dir, e.at("labels_sidecar").get<std::string>());
    rec.disparity = join_dir(dir, e.at("disparity").get<std::string>());
    rec.camera = join_dir(dir, e.at("camera").get<std::string>());
    corpus.scenes.push_back(std::move(rec));
  }
  if (corpus.scenes.empty()) throw std::runtime_error(json_path + ": empty clear corpus");
  corpus.digest = digest_string(text);
  return corpus;
}

RealCorpus load_real_corpus(const std::string& json_path) {
  const std::string text = read_text_file(json_path);
  nlohmann::json j = nlohmann::json::parse(text);
  const std::string dir = fs::path(json_path).parent_path().string();

  RealCorpus corpus;
  for (const auto& e : j.at("images")) {
    RealRecord rec;
    rec.image = join_dir(dir, e.at("image").get<std::string>());
    if (e.contains("true_beta")) rec.true_beta = e["true_beta"].get<double>();
    if (e.contains("gt_labels")) rec.gt_labels_png = join_dir(dir, e["gt_labels"].get<std::string>());
    if (e.contains("gt_labels_sidecar"))
      rec.gt_labels_sidecar = join_dir(dir, e["gt_labels_sidecar"].get<std::string>());
    corpus.images.push_back(std::move(rec));
  }
  corpus.digest = digest_string(text);
  return corpus;
}

LabeledScene load_scene(const SceneRecord& rec, std::optional<int> sky_label) {
  LabeledScene scene;
  scene.clear = read_rgb8(rec.image);
  scene.labels = read_labels(rec.labels_png, rec.labels_sidecar);
  scene.disparity = read_disparity(rec.disparity);
  scene.camera = read_camera(rec.camera);
  scene.sky_label = sky_label;
  return scene;
}

// ---- manifests ------------------------------------------------------------------

std::string origin_name(ManifestEntry::Origin o) {
  switch (o) {
    case ManifestEntry::Origin::Synthetic: return "synthetic";
    case ManifestEntry::Origin::Real: return "real";
    case ManifestEntry::Origin::RealDensified: return "real-densified";
  }
  throw std::logic_error("unknown origin");
}

namespace {

ManifestEntry::Origin origin_from_name(const std::string& name) {
  if (name == "synthetic") return ManifestEntry::Origin::Synthetic;
  if (name == "real") return ManifestEntry::Origin::Real;
  if (name == "real-densified") return ManifestEntry::Origin::RealDensified;
  throw std::runtime_error("unknown manifest origin: " + name);
}

}  // namespace

void DatasetManifest::save(const std::string& path) const {
  std::ostringstream out;
  out << "# fog-dataset-manifest 1\n";
  out << "# stage " << stage_z << "\n";
  for (const auto& [k, v] : header) out << "# " << k << " " << v << "\n";
  for (const auto& e : entries) {
    out << e.image_path << "\t" << e.label_path << "\t" << e.label_sidecar << "\t"
        << origin_name(e.origin) << "\t" << format_double(e.beta_l) << "\t"
        << format_double(e.beta_d) << "\n";
  }
  write_text_file(path, out.str());
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::istringstream in(read_text_file(path));
  DatasetManifest m;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key, value;
      hs >> key;
      std::getline(hs, value);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      if (first && key != "fog-dataset-manifest")
        throw std::runtime_error(path + ": not a fog-dataset-manifest");
      if (key == "stage") m.stage_z = std::stoi(value);
      else if (!first) m.header.emplace_back(key, value);
      first = false;
      continue;
    }
    std::istringstream ls(line);
    ManifestEntry e;
    std::string origin, beta_l, beta_d;
    std::getline(ls, e.image_path, '\t');
    std::getline(ls, e.label_path, '\t');
    std::getline(ls, e.label_sidecar, '\t');
    std::getline(ls, origin, '\t');
    std::getline(ls, beta_l, '\t');
    std::getline(ls, beta_d, '\t');
    e.origin = origin_from_name(origin);
    e.beta_l = std::stod(beta_l);
    e.beta_d = std::stod(beta_d);
    m.entries.push_back(std::move(e));
  }
  return m;
}

// ---- stage dataset construction ---------------------------------------------------

ScenePreparations ScenePreparations::build(const ClearCorpus& corpus,
                                           const SimulationParams& params) {
  ScenePreparations prep;
  prep.scenes.reserve(corpus.scenes.size());
  for (const auto& rec : corpus.scenes) prep.scenes.push_back(load_scene(rec, corpus.sky_label));
  prep.prepared.reserve(prep.scenes.size());
  for (const auto& scene : prep.scenes) prep.prepared.push_back(prepare_scene(scene, params));
  return prep;
}

namespace {

std::string relative_to(const std::string& target, const fs::path& base) {
  std::error_code ec;
  const fs::path rel = fs::proximate(target, base, ec);
  return ec ? target : rel.string();
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace

StageDatasets build_stage_datasets(const CurriculumSchedule& schedule, int z,
                                   const ClearCorpus& clear_corpus, const RealCorpus& real_corpus,
                                   const SegmentationModel* prev_model,
                                   const StageOptions& options) {
  schedule.validate();
  if (z < 2 || z > schedule.stages())
    throw std::invalid_argument("build_stage_datasets: stage index out of range");
  if (clear_corpus.scenes.empty())
    throw std::invalid_argument("build_stage_datasets: empty clear corpus");
  if (z >= 3 && prev_model == nullptr)
    throw std::invalid_argument("build_stage_datasets: previous-stage model required for z >= 3");
  if (z >= 3 && options.density_model == nullptr)
    throw std::invalid_argument("build_stage_datasets: density model required for z >= 3");
  if (schedule.densify_enabled && z >= 3 && options.histogram == nullptr)
    throw std::invalid_argument("build_stage_datasets: densification needs a distance histogram");

  const Scalar beta_z = schedule.betas[static_cast<size_t>(z - 1)];
  const Scalar beta_prev = schedule.betas[static_cast<size_t>(z - 2)];

  const fs::path stage_dir = fs::path(options.out_dir) / ("stage_" + std::to_string(z));
  fs::create_directories(stage_dir);

  std::vector<std::pair<std::string, std::string>> header = {
      {"schedule_digest", schedule.digest()},
      {"clear_corpus_digest", clear_corpus.digest},
      {"real_corpus_digest", real_corpus.digest},
      {"density_model_digest",
       options.density_model ? digest_string([&] {
         std::ostringstream os;
         for (Eigen::Index i = 0; i < options.density_model->weights.size(); ++i)
           os << format_double(options.density_model->weights[i]) << ",";
         os << format_double(options.density_model->bias);
         return os.str();
       }()) : std::string("none")},
      {"prev_model_digest", prev_model ? prev_model->state_digest() : std::string("none")},
      {"seed", std::to_string(options.seed)},
  };

  StageDatasets out;
  out.syn.stage_z = z;
  out.syn.header = header;
  out.real.stage_z = z;
  out.real.header = header;

  // Synthetic set: fog of exactly beta_z on every clear scene, labels
  // inherited from the clear annotation.
  const ScenePreparations* prep = options.prepared;
  ScenePreparations local;
  if (!prep) {
    local = ScenePreparations::build(clear_corpus, options.sim);
    prep = &local;
  }
  for (size_t i = 0; i < clear_corpus.scenes.size(); ++i) {
    const auto& rec = clear_corpus.scenes[i];
    const SimulationResult sim = simulate_prepared(prep->prepared[i], beta_z, options.sim);
    const std::string name = stem_of(rec.image) + "_syn.png";
    write_rgb8((stage_dir / name).string(), sim.foggy);

    ManifestEntry e;
    e.image_path = name;
    e.label_path = relative_to(rec.labels_png, stage_dir);
    e.label_sidecar = relative_to(rec.labels_sidecar, stage_dir);
    e.origin = ManifestEntry::Origin::Synthetic;
    e.beta_l = 0;
    e.beta_d = beta_z;
    out.syn.entries.push_back(std::move(e));
  }

  // Real set: estimated density at most beta_{z-1}, pseudo-labeled by the
  // previous stage's model. Empty at z = 2 (no real images below the clear
  // domain), densified toward [beta_{z-1}, beta_z] for CMAda+.
  if (z >= 3 && !real_corpus.images.empty()) {
    for (size_t i = 0; i < real_corpus.images.size(); ++i) {
      const auto& rec = real_corpus.images[i];
      const RgbImage img = read_rgb8(rec.image);
      const Scalar beta_l = predict_density(*options.density_model, img);
      if (beta_l > beta_prev) continue;

      auto [pseudo, confidence] = prev_model->predict_with_confidence(img);
      if (options.min_pseudo_confidence > 0) {
        for (Eigen::Index x = 0; x < pseudo.width(); ++x)
          for (Eigen::Index y = 0; y < pseudo.height(); ++y)
            if (confidence(y, x) < options.min_pseudo_confidence) pseudo.ids(y, x) = kVoidLabel;
      }
      const std::string stem = stem_of(rec.image);
      const std::string label_png = stem + "_pseudo.png";
      const std::string label_json = stem + "_pseudo.json";
      write_labels((stage_dir / label_png).string(), (stage_dir / label_json).string(), pseudo);

      ManifestEntry e;
      e.label_path = label_png;
      e.label_sidecar = label_json;
      e.beta_l = beta_l;
      if (schedule.densify_enabled) {
        const Scalar beta_d = map_target_beta(beta_l, beta_prev, beta_z);
        const Vec3 light = estimate_atmospheric_light(img, nullptr, std::nullopt, options.sim.light);
        const DensifyResult dens = densify_image(img, beta_l, beta_d, *options.histogram, light);
        const std::string name = stem + "_densified.png";
        write_rgb8((stage_dir / name).string(), dens.image);
        e.image_path = name;
        e.origin = ManifestEntry::Origin::RealDensified;
        e.beta_d = beta_d;
      } else {
        e.image_path = relative_to(rec.image, stage_dir);
        e.origin = ManifestEntry::Origin::Real;
        e.beta_d = beta_l;
      }
      out.real.entries.push_back(std::move(e));
    }
    if (out.real.entries.empty())
      std::cerr << "warning: stage " << z << ": every real-image density estimate exceeds "
                << beta_prev << "; real manifest is empty\n";
  }

  out.syn.save((stage_dir / "syn_manifest.tsv").string());
  out.real.save((stage_dir / "real_manifest.tsv").string());
  return out;
}

// ---- mixed stream ------------------------------------------------------------------

MixedStream::MixedStream(const DatasetManifest& syn, const DatasetManifest& real, Scalar w,
                         uint64_t seed)
    : syn_(syn), real_(real), w_(w), rng_(seed) {
  if (syn_.entries.empty()) throw std::invalid_argument("mixed_stream: synthetic set is empty");
  if (w_ < 0) throw std::invalid_argument("mixed_stream: w must be >= 0");
  if (w_ > 0 && real_.entries.empty())
    throw std::invalid_argument("mixed_stream: w > 0 requires a non-empty real set");
  syn_order_.resize(syn_.entries.size());
  real_order_.resize(real_.entries.size());
  std::iota(syn_order_.begin(), syn_order_.end(), 0);
  std::iota(real_order_.begin(), real_order_.end(), 0);
  reshuffle(syn_order_);
  if (!real_order_.empty()) reshuffle(real_order_);
}

void MixedStream::reshuffle(std::vector<size_t>& order) {
  std::shuffle(order.begin(), order.end(), rng_);
}

const ManifestEntry& MixedStream::next() {
  const bool pick_real =
      w_ > 0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < w_ / (1.0 + w_);
  if (pick_real) {
    if (real_cursor_ == real_order_.size()) {
      reshuffle(real_order_);
      real_cursor_ = 0;
    }
    return real_.entries[real_order_[real_cursor_++]];
  }
  if (syn_cursor_ == syn_order_.size()) {
    reshuffle(syn_order_);
    syn_cursor_ = 0;
  }
  return syn_.entries[syn_order_[syn_cursor_++]];
}

std::vector<ManifestEntry> MixedStream::take(size_t n) {
  std::vector<ManifestEntry> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

Scalar MixedStream::lambda() const {
  return w_ * static_cast<Scalar>(real_.entries.size()) / static_cast<Scalar>(syn_.entries.size());
}

// ---- evaluation ----------------------------------------------------------------------

void IouAccumulator::add(const SemanticLabeling& pred, const SemanticLabeling& truth,
                         const MeanIouOptions& opts) {
  require_same_shape(pred.height(), pred.width(), truth.height(), truth.width(), "mean_iou");
  for (Eigen::Index x = 0; x < truth.width(); ++x) {
    for (Eigen::Index y = 0; y < truth.height(); ++y) {
      const int t = truth.class_of(truth.ids(y, x));
      if (opts.void_label && t == *opts.void_label) continue;
      const int p = pred.class_of(pred.ids(y, x));
      ++scored_pixels_;
      if (p == t) {
        ++counts_[t].tp;
      } else {
        ++counts_[t].fn;
        if (!opts.void_label || p != *opts.void_label) ++counts_[p].fp;
      }
    }
  }
}

std::vector<std::pair<int, Scalar>> IouAccumulator::per_class_iou(
    const MeanIouOptions& opts) const {
  if (scored_pixels_ == 0) throw std::runtime_error("mean_iou: no non-void pixels to score");
  std::vector<std::pair<int, Scalar>> out;
  for (const auto& [cls, c] : counts_) {
    if (c.tp + c.fp + c.fn == 0) continue;
    if (opts.class_subset &&
        std::find(opts.class_subset->begin(), opts.class_subset->end(), cls) ==
            opts.class_subset->end())
      continue;
    out.emplace_back(cls, static_cast<Scalar>(c.tp) / static_cast<Scalar>(c.tp + c.fp + c.fn));
  }
  return out;
}

Scalar IouAccumulator::mean_iou(const MeanIouOptions& opts) const {
  const auto per_class = per_class_iou(opts);
  if (per_class.empty()) throw std::runtime_error("mean_iou: no classes to score");
  Scalar sum = 0;
  for (const auto& [cls, iou] : per_class) sum += iou;
  return sum / static_cast<Scalar>(per_class.size());
}

Scalar mean_iou(const SemanticLabeling& pred, const SemanticLabeling& truth,
                const MeanIouOptions& opts) {
  IouAccumulator acc;
  acc.add(pred, truth, opts);
  return acc.mean_iou(opts);
}

// ---- orchestration --------------------------------------------------------------------

namespace {

std::optional<Scalar> evaluate_model(const SegmentationModel& model,
                                     const std::vector<TrainSample>* eval_set,
                                     const MeanIouOptions& opts) {
  if (!eval_set || eval_set->empty()) return std::nullopt;
  IouAccumulator acc;
  for (const auto& sample : *eval_set) acc.add(model.predict(sample.image), sample.labels, opts);
  return acc.mean_iou(opts);
}

std::vector<TrainSample> load_stage_samples(const std::vector<ManifestEntry>& draws,
                                            const fs::path& stage_dir) {
  std::vector<TrainSample> samples;
  samples.reserve(draws.size());
  for (const auto& e : draws) {
    TrainSample s;
    s.image = read_rgb8(join_dir(stage_dir.string(), e.image_path));
    s.labels = read_labels(join_dir(stage_dir.string(), e.label_path),
                           join_dir(stage_dir.string(), e.label_sidecar));
    samples.push_back(std::move(s));
  }
  return samples;
}

}  // namespace

CmadaResult run_cmada(const CurriculumSchedule& schedule, const ClearCorpus& clear_corpus,
                      const RealCorpus& real_corpus, const DensityModel& density_model,
                      const CmadaOptions& options) {
  schedule.validate();
  if (!options.trainer_factory) throw std::invalid_argument("run_cmada: trainer factory required");
  fs::create_directories(options.out_dir);

  CmadaResult result;
  const ScenePreparations prep = ScenePreparations::build(clear_corpus, options.sim);

  // Stage 1: phi^1 is trained on the labeled clear-weather corpus directly.
  std::vector<TrainSample> clear_samples;
  for (const auto& scene : prep.scenes)
    clear_samples.push_back({scene.clear, scene.labels.class_view()});

  // The source model is a fully trained clear-weather expert, not a lightly
  // warmed one; give it a longer budget by default.
  const int baseline_epochs =
      options.baseline_epochs > 0 ? options.baseline_epochs
      : options.epochs_per_stage > 0 ? 4 * options.epochs_per_stage
                                     : 0;
  std::unique_ptr<TrainableModel> model = options.trainer_factory();
  model->train(clear_samples, baseline_epochs);
  {
    StageReport report;
    report.z = 1;
    report.beta = schedule.betas[0];
    report.syn_count = clear_samples.size();
    report.checkpoint = (fs::path(options.out_dir) / "model_stage_1.txt").string();
    model->save(report.checkpoint);
    report.miou = evaluate_model(*model, options.eval_set, options.eval_options);
    result.stages.push_back(std::move(report));
  }
  result.baseline = model->clone();

  DistanceHistogram histogram;
  if (schedule.densify_enabled) {
    std::vector<ScalarMap> distances;
    for (const auto& p : prep.prepared) distances.push_back(p.distance);
    histogram = build_distance_histogram(distances);
    histogram.save((fs::path(options.out_dir) / "distance_histogram.txt").string());
  }

  for (int z = 2; z <= schedule.stages(); ++z) {
    StageOptions stage_opts;
    stage_opts.out_dir = options.out_dir;
    stage_opts.seed = options.seed;
    stage_opts.sim = options.sim;
    stage_opts.min_pseudo_confidence = options.min_pseudo_confidence;
    stage_opts.prepared = &prep;
    stage_opts.density_model = &density_model;
    if (schedule.densify_enabled) stage_opts.histogram = &histogram;

    const StageDatasets datasets = build_stage_datasets(
        schedule, z, clear_corpus, real_corpus, z >= 3 ? model.get() : nullptr, stage_opts);

    const bool has_real = !datasets.real.entries.empty();
    const Scalar w = has_real ? schedule.w : 0.0;
    MixedStream stream(datasets.syn, datasets.real, w, options.seed + static_cast<uint64_t>(z));
    const auto n_draws = static_cast<size_t>(
        std::lround(static_cast<double>(datasets.syn.entries.size()) * (1.0 + w)));
    const fs::path stage_dir = fs::path(options.out_dir) / ("stage_" + std::to_string(z));
    const std::vector<TrainSample> samples = load_stage_samples(stream.take(n_draws), stage_dir);

    std::unique_ptr<TrainableModel> next = model->clone();  // warm start
    next->train(samples, options.epochs_per_stage);
    model = std::move(next);

    StageReport report;
    report.z = z;
    report.beta = schedule.betas[static_cast<size_t>(z - 1)];
    report.syn_count = datasets.syn.entries.size();
    report.real_count = datasets.real.entries.size();
    report.lambda = stream.lambda();
    report.checkpoint = (fs::path(options.out_dir) / ("model_stage_" + std::to_string(z) + ".txt")).string();
    model->save(report.checkpoint);
    report.miou = evaluate_model(*model, options.eval_set, options.eval_options);
    result.stages.push_back(std::move(report));
  }

  // Machine-readable metrics plus a small summary table.
  nlohmann::json j;
  j["schedule"] = schedule.betas;
  j["densify_enabled"] = schedule.densify_enabled;
  j["w"] = schedule.w;
  j["seed"] = options.seed;
  j["epochs_per_stage"] = options.epochs_per_stage;
  j["stages"] = nlohmann::json::array();
  for (const auto& s : result.stages) {
    nlohmann::json js;
    js["z"] = s.z;
    js["beta"] = s.beta;
    js["syn_count"] = s.syn_count;
    js["real_count"] = s.real_count;
    js["lambda"] = s.lambda;
    js["checkpoint"] = fs::path(s.checkpoint).filename().string();
    if (s.miou) js["miou"] = *s.miou;
    j["stages"].push_back(js);
  }
  result.report_json = (fs::path(options.out_dir) / "report.json").string();
  write_text_file(result.report_json, j.dump(2) + "\n");

  std::ostringstream table;
  table << "stage  beta       syn  real  lambda   mIoU\n";
  for (const auto& s : result.stages) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-6d %-9.4g %4zu %5zu  %-7.4g  %s\n", s.z, s.beta,
                  s.syn_count, s.real_count, s.lambda,
                  s.miou ? format_double(*s.miou).c_str() : "-");
    table << line;
  }
  result.report_txt = (fs::path(options.out_dir) / "report.txt").string();
  write_text_file(result.report_txt, table.str());

  result.model = std::move(model);
  return result;
}

Scalar calibrate_clear_fog_threshold(const DensityModel& model,
                                     const std::vector<RgbImage>& clear_images,
                                     const std::vector<RgbImage>& foggy_images) {
  if (clear_images.empty() || foggy_images.empty())
    throw std::invalid_argument("calibrate_clear_fog_threshold: both classes need samples");
  auto median_estimate = [&](const std::vector<RgbImage>& images) {
    std::vector<Scalar> est;
    est.reserve(images.size());
    for (const auto& img : images) est.push_back(predict_density(model, img));
    auto mid = est.begin() + static_cast<long>(est.size() / 2);
    std::nth_element(est.begin(), mid, est.end());
    return *mid;
  };
  return 0.5 * (median_estimate(clear_images) + median_estimate(foggy_images));
}

SemanticLabeling model_select(const SegmentationModel& clear_model,
                              const SegmentationModel& fog_model, const WeatherClassifier& g,
                              const RgbImage& img) {
  return g.classify(img) == 1 ? clear_model.predict(img) : fog_model.predict(img);
}

}  // namespace fog
