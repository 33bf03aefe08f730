// fogtool: batch front end for fog simulation, density estimation,
// densification, curriculum training and evaluation.
//
// Exit codes: 0 success, 2 usage error, 1 runtime error. Logs go to stderr;
// data only ever goes to files. All randomness flows from --seed.

#include "fog/color.hpp"
#include "fog/curriculum.hpp"
#include "fog/density.hpp"
#include "fog/densify.hpp"
#include "fog/io.hpp"
#include "fog/optics.hpp"
#include "fog/toy.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct GlobalArgs {
  uint64_t seed = 0;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

void parallel_for(size_t n, unsigned jobs, const std::function<void(size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  const unsigned workers = std::min<unsigned>(jobs, static_cast<unsigned>(n));
  std::exception_ptr error;
  std::mutex error_mutex;
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// Provenance manifest: parameters, input digests and outputs, no timestamps
// and no absolute output paths, so identical runs produce identical bytes.
class Provenance {
 public:
  Provenance(std::string subcommand, const GlobalArgs& args) {
    j_["tool"] = "fogtool";
    j_["version"] = kVersion;
    j_["subcommand"] = std::move(subcommand);
    j_["parameters"]["seed"] = args.seed;
  }
  json& parameters() { return j_["parameters"]; }
  void add_input(const std::string& path) { j_["inputs"][path] = fog::digest_file(path); }
  void add_output(const std::string& relative) { outputs_.push_back(relative); }
  void write(const fs::path& dir) {
    std::sort(outputs_.begin(), outputs_.end());
    j_["outputs"] = outputs_;
    fog::write_text_file((dir / "provenance.json").string(), j_.dump(2) + "\n");
  }

 private:
  json j_;
  std::vector<std::string> outputs_;
};

std::vector<double> parse_beta_list(const std::string& csv) {
  std::vector<double> betas;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) betas.push_back(std::stod(item));
  return betas;
}

std::string beta_tag(double beta) {
  std::string s = fog::format_double(beta);
  for (char& c : s)
    if (c == '.') c = '_';
  return s;
}

fog::MeanIouOptions iou_options(const std::string& classes_csv, int void_label) {
  fog::MeanIouOptions opts;
  if (void_label >= 0) opts.void_label = void_label;
  else opts.void_label.reset();
  if (!classes_csv.empty()) {
    std::vector<int> subset;
    std::stringstream ss(classes_csv);
    std::string item;
    while (std::getline(ss, item, ',')) subset.push_back(std::stoi(item));
    opts.class_subset = std::move(subset);
  }
  return opts;
}

// TSV rows `path<TAB>beta<TAB>percentile`.
void write_density_tsv(const std::string& path,
                       const std::vector<std::string>& names,
                       const std::vector<fog::RankedImage>& ranked, bool sorted_order) {
  std::ostringstream out;
  if (sorted_order) {
    for (const auto& r : ranked)
      out << names[r.input_index] << "\t" << fog::format_double(r.estimate) << "\t"
          << fog::format_double(r.percentile) << "\n";
  } else {
    std::vector<const fog::RankedImage*> by_input(ranked.size());
    for (const auto& r : ranked) by_input[r.input_index] = &r;
    for (size_t i = 0; i < by_input.size(); ++i)
      out << names[i] << "\t" << fog::format_double(by_input[i]->estimate) << "\t"
          << fog::format_double(by_input[i]->percentile) << "\n";
  }
  fog::write_text_file(path, out.str());
}

// ---- subcommand implementations ------------------------------------------------

int cmd_make_toy_corpus(const GlobalArgs& g, const std::string& out_dir, int clear_count,
                        int real_count, int test_count, int width, int height) {
  fog::ToyCorpusParams params;
  params.width = width;
  params.height = height;
  params.clear_count = clear_count;
  params.real_count = real_count;
  params.test_count = test_count;
  params.seed = g.seed;
  const fog::ToyCorpusPaths paths = fog::make_toy_corpus(params, out_dir);

  Provenance prov("make-toy-corpus", g);
  prov.parameters()["clear"] = clear_count;
  prov.parameters()["real"] = real_count;
  prov.parameters()["test"] = test_count;
  prov.parameters()["width"] = width;
  prov.parameters()["height"] = height;
  prov.add_output("clear_corpus.json");
  prov.add_output("real_corpus.json");
  prov.add_output("test_corpus.json");
  prov.write(out_dir);
  std::cerr << "toy corpus written to " << paths.root << "\n";
  return 0;
}

int cmd_simulate(const GlobalArgs& g, const std::string& corpus_path, double beta,
                 const std::string& out_dir, const fog::SimulationParams& sim,
                 const std::string& hist_out, int hist_bins) {
  const fog::ClearCorpus corpus = fog::load_clear_corpus(corpus_path);
  fs::create_directories(out_dir);

  Provenance prov("simulate", g);
  prov.parameters()["beta"] = beta;
  prov.parameters()["mu"] = sim.filter.mu;
  prov.parameters()["sigma_s"] = sim.filter.sigma_s;
  prov.parameters()["sigma_c"] = sim.filter.sigma_c;
  prov.add_input(corpus_path);

  std::vector<fog::ScalarMap> distances(corpus.scenes.size());
  std::vector<std::pair<std::string, std::string>> written(corpus.scenes.size());
  parallel_for(corpus.scenes.size(), g.jobs, [&](size_t i) {
    const fog::LabeledScene scene = fog::load_scene(corpus.scenes[i], corpus.sky_label);
    const fog::SimulationResult res = fog::simulate(scene, beta, sim);
    const std::string stem = fs::path(corpus.scenes[i].image).stem().string();
    const std::string foggy = stem + "_beta" + beta_tag(beta) + ".png";
    const std::string tmap = stem + "_beta" + beta_tag(beta) + "_t.png";
    fog::write_rgb8((fs::path(out_dir) / foggy).string(), res.foggy);
    fog::write_transmittance((fs::path(out_dir) / tmap).string(), res.t);
    distances[i] = res.distance;
    written[i] = {foggy, tmap};
  });
  for (const auto& [foggy, tmap] : written) {
    prov.add_output(foggy);
    prov.add_output(tmap);
  }

  if (!hist_out.empty()) {
    if (beta == 0)
      throw std::runtime_error("simulate: --hist-out needs beta > 0 (depth is not completed)");
    const fog::DistanceHistogram hist = fog::build_distance_histogram(distances, hist_bins);
    hist.save((fs::path(out_dir) / hist_out).string());
    prov.add_output(hist_out);
  }
  prov.write(out_dir);
  std::cerr << "simulated " << corpus.scenes.size() << " scenes at beta=" << beta << "\n";
  return 0;
}

int cmd_fit_density(const GlobalArgs& g, const std::string& corpus_path,
                    const std::string& betas_csv, double lambda, const std::string& model_out,
                    const fog::SimulationParams& sim) {
  const fog::ClearCorpus corpus = fog::load_clear_corpus(corpus_path);
  const std::vector<double> betas = parse_beta_list(betas_csv);
  if (betas.size() < 2) throw std::runtime_error("fit-density: need at least two beta levels");

  std::vector<std::vector<std::pair<fog::FogFeatureVector, fog::Scalar>>> per_scene(
      corpus.scenes.size());
  parallel_for(corpus.scenes.size(), g.jobs, [&](size_t i) {
    const fog::LabeledScene scene = fog::load_scene(corpus.scenes[i], corpus.sky_label);
    const fog::PreparedScene prep = fog::prepare_scene(scene, sim);
    for (double beta : betas) {
      const fog::RgbImage img =
          beta == 0 ? scene.clear : fog::simulate_prepared(prep, beta, sim).foggy;
      per_scene[i].emplace_back(fog::extract_features(img), beta);
    }
  });
  std::vector<std::pair<fog::FogFeatureVector, fog::Scalar>> samples;
  for (auto& block : per_scene)
    samples.insert(samples.end(), block.begin(), block.end());

  const fog::DensityModel model = fog::fit_density_model(samples, lambda);
  fs::create_directories(fs::path(model_out).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(model_out).parent_path());
  model.save(model_out);
  std::cerr << "fitted density model on " << samples.size() << " samples; training rmse "
            << model.training_rmse << "\n";
  return 0;
}

std::vector<std::string> gather_images(const std::vector<std::string>& images,
                                       const std::string& list_path) {
  std::vector<std::string> paths = images;
  if (!list_path.empty()) {
    // Either a real-corpus JSON or a plain list, one path per line.
    const std::string text = fog::read_text_file(list_path);
    if (!text.empty() && text[0] == '{') {
      const fog::RealCorpus corpus = fog::load_real_corpus(list_path);
      for (const auto& rec : corpus.images) paths.push_back(rec.image);
    } else {
      std::istringstream in(text);
      std::string line;
      while (std::getline(in, line))
        if (!line.empty()) paths.push_back(line);
    }
  }
  if (paths.empty()) throw std::runtime_error("no input images given");
  return paths;
}

int cmd_density_scores(const GlobalArgs& g, const char* name, bool sorted_order,
                       const std::string& model_path, const std::vector<std::string>& images,
                       const std::string& list_path, const std::string& out_path) {
  const fog::DensityModel model = fog::DensityModel::load(model_path);
  const std::vector<std::string> paths = gather_images(images, list_path);

  std::vector<fog::FogFeatureVector> features(paths.size());
  parallel_for(paths.size(), g.jobs, [&](size_t i) {
    features[i] = fog::extract_features(fog::read_rgb8(paths[i]));
  });
  const auto ranked = fog::rank_by_density(model, features);

  fs::create_directories(fs::path(out_path).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(out_path).parent_path());
  write_density_tsv(out_path, paths, ranked, sorted_order);
  std::cerr << name << ": scored " << paths.size() << " images -> " << out_path << "\n";
  return 0;
}

int cmd_densify(const GlobalArgs& g, const std::string& model_path, const std::string& hist_path,
                double beta_prev, double beta_next, const std::vector<std::string>& images,
                const std::string& list_path, const std::string& out_dir) {
  const fog::DensityModel model = fog::DensityModel::load(model_path);
  const fog::DistanceHistogram hist = fog::DistanceHistogram::load(hist_path);
  const std::vector<std::string> paths = gather_images(images, list_path);
  fs::create_directories(out_dir);

  Provenance prov("densify", g);
  prov.parameters()["beta_prev"] = beta_prev;
  prov.parameters()["beta_next"] = beta_next;
  prov.add_input(model_path);
  prov.add_input(hist_path);

  struct Row {
    std::string name;
    double estimate, beta_l, beta_d, t_l, t_d;
  };
  std::vector<Row> rows(paths.size());
  parallel_for(paths.size(), g.jobs, [&](size_t i) {
    const fog::RgbImage img = fog::read_rgb8(paths[i]);
    const double estimate = fog::predict_density(model, img);
    const double beta_l = std::min(estimate, beta_prev);  // clamp into the stage interval
    const double beta_d = fog::map_target_beta(beta_l, beta_prev, beta_next);
    const fog::Vec3 light = fog::estimate_atmospheric_light(img);
    const fog::DensifyResult res = fog::densify_image(img, beta_l, beta_d, hist, light);
    const std::string name = fs::path(paths[i]).stem().string() + "_densified.png";
    fog::write_rgb8((fs::path(out_dir) / name).string(), res.image);
    rows[i] = {name, estimate, beta_l, beta_d, res.t_l, res.t_d};
  });

  std::ostringstream sidecar;
  sidecar << "# image\testimate\tbeta_l\tbeta_d\tt_l\tt_d\n";
  for (const auto& r : rows) {
    sidecar << r.name << "\t" << fog::format_double(r.estimate) << "\t"
            << fog::format_double(r.beta_l) << "\t" << fog::format_double(r.beta_d) << "\t"
            << fog::format_double(r.t_l) << "\t" << fog::format_double(r.t_d) << "\n";
    prov.add_output(r.name);
  }
  fog::write_text_file((fs::path(out_dir) / "densify_provenance.tsv").string(), sidecar.str());
  prov.add_output("densify_provenance.tsv");
  prov.write(out_dir);
  std::cerr << "densified " << paths.size() << " images into [" << beta_prev << ", " << beta_next
            << "]\n";
  return 0;
}

int cmd_curriculum_run(const GlobalArgs& g_in, const std::string& config_path,
                       std::string out_dir, int epochs_flag) {
  const json cfg = json::parse(fog::read_text_file(config_path));
  GlobalArgs g = g_in;

  // The config file is authoritative; flags fill the gaps.
  fog::CurriculumSchedule schedule;
  schedule.betas = cfg.at("schedule").get<std::vector<double>>();
  schedule.densify_enabled = cfg.value("densify", false);
  schedule.w = cfg.value("w", 1.0);
  schedule.validate();
  if (cfg.contains("seed")) g.seed = cfg["seed"].get<uint64_t>();
  if (cfg.contains("out_dir")) out_dir = cfg["out_dir"].get<std::string>();
  if (out_dir.empty()) throw std::runtime_error("curriculum-run: no output directory given");
  const int epochs = cfg.value("epochs_per_stage", epochs_flag);
  const int baseline_epochs = cfg.value("baseline_epochs", 0);

  const std::string base = fs::path(config_path).parent_path().string();
  auto resolve = [&](const std::string& p) {
    return p.empty() || fs::path(p).is_absolute() ? p : (fs::path(base) / p).string();
  };

  const fog::ClearCorpus clear = fog::load_clear_corpus(resolve(cfg.at("clear_corpus")));
  const fog::RealCorpus real = fog::load_real_corpus(resolve(cfg.at("real_corpus")));

  fs::create_directories(out_dir);

  // Density model: load if given, otherwise train on the clear corpus at the
  // standard levels.
  fog::DensityModel density;
  if (cfg.contains("density_model")) {
    density = fog::DensityModel::load(resolve(cfg["density_model"]));
  } else {
    const std::vector<double> levels =
        cfg.value("density_betas", std::vector<double>{0.0, 0.005, 0.01, 0.02});
    std::vector<std::pair<fog::FogFeatureVector, fog::Scalar>> samples;
    for (const auto& rec : clear.scenes) {
      const fog::LabeledScene scene = fog::load_scene(rec, clear.sky_label);
      const fog::PreparedScene prep = fog::prepare_scene(scene, {});
      for (double beta : levels)
        samples.emplace_back(
            fog::extract_features(beta == 0 ? scene.clear
                                            : fog::simulate_prepared(prep, beta, {}).foggy),
            beta);
    }
    density = fog::fit_density_model(samples);
    density.save((fs::path(out_dir) / "density_model.txt").string());
  }

  std::vector<fog::TrainSample> eval_set;
  fog::CmadaOptions options;
  if (cfg.contains("test_corpus")) {
    const fog::RealCorpus test = fog::load_real_corpus(resolve(cfg["test_corpus"]));
    for (const auto& rec : test.images) {
      if (!rec.gt_labels_png) continue;
      eval_set.push_back({fog::read_rgb8(rec.image),
                          fog::read_labels(*rec.gt_labels_png, *rec.gt_labels_sidecar)
                              .class_view()});
    }
    if (!eval_set.empty()) options.eval_set = &eval_set;
  }

  options.out_dir = out_dir;
  options.seed = g.seed;
  options.epochs_per_stage = epochs;
  options.baseline_epochs = baseline_epochs;
  options.min_pseudo_confidence = cfg.value("min_pseudo_confidence", 0.0);
  const int pixels_per_image = cfg.value("pixels_per_image", 1500);
  const int num_classes = clear.num_classes;
  const uint64_t trainer_seed = g.seed;
  options.trainer_factory = [num_classes, pixels_per_image, trainer_seed] {
    return std::make_unique<fog::ToyTrainer>(fog::ToyTrainer::Config{
        .num_classes = num_classes, .pixels_per_image = pixels_per_image, .seed = trainer_seed});
  };

  const fog::CmadaResult result = fog::run_cmada(schedule, clear, real, density, options);
  for (const auto& s : result.stages) {
    std::cerr << "stage " << s.z << " (beta=" << s.beta << "): syn=" << s.syn_count
              << " real=" << s.real_count;
    if (s.miou) std::cerr << " mIoU=" << *s.miou;
    std::cerr << "\n";
  }

  Provenance prov("curriculum-run", g);
  prov.parameters()["schedule"] = schedule.betas;
  prov.parameters()["densify"] = schedule.densify_enabled;
  prov.parameters()["w"] = schedule.w;
  prov.parameters()["epochs_per_stage"] = epochs;
  prov.add_input(config_path);
  for (const auto& s : result.stages)
    prov.add_output(fs::path(s.checkpoint).filename().string());
  prov.add_output("report.json");
  prov.add_output("report.txt");
  prov.write(out_dir);
  return 0;
}

int cmd_select_model(const GlobalArgs& g, const std::string& clear_model_path,
                     const std::string& fog_model_path, const std::string& density_model_path,
                     double threshold, const std::vector<std::string>& images,
                     const std::string& list_path, const std::string& out_dir) {
  fog::ToyTrainer clear_model, fog_model;
  clear_model.load(clear_model_path);
  fog_model.load(fog_model_path);
  const fog::DensityThresholdClassifier g_fn(fog::DensityModel::load(density_model_path),
                                             threshold);
  const std::vector<std::string> paths = gather_images(images, list_path);
  fs::create_directories(out_dir);

  Provenance prov("select-model", g);
  prov.parameters()["threshold"] = threshold;
  prov.add_input(clear_model_path);
  prov.add_input(fog_model_path);
  prov.add_input(density_model_path);

  std::ostringstream routing;
  routing << "# image\troute\tlabels\n";
  for (const auto& path : paths) {
    const fog::RgbImage img = fog::read_rgb8(path);
    const int route = g_fn.classify(img);
    const fog::SemanticLabeling labels = fog::model_select(clear_model, fog_model, g_fn, img);
    const std::string stem = fs::path(path).stem().string();
    fog::write_labels((fs::path(out_dir) / (stem + "_labels.png")).string(),
                      (fs::path(out_dir) / (stem + "_labels.json")).string(), labels);
    routing << path << "\t" << (route == 1 ? "clear" : "fog") << "\t" << stem + "_labels.png"
            << "\n";
    prov.add_output(stem + "_labels.png");
    prov.add_output(stem + "_labels.json");
  }
  fog::write_text_file((fs::path(out_dir) / "routing.tsv").string(), routing.str());
  prov.add_output("routing.tsv");
  prov.write(out_dir);
  return 0;
}

int cmd_eval_miou(const GlobalArgs&, const std::string& pairs_path, const std::string& pred_png,
                  const std::string& truth_png, const std::string& classes_csv, int void_label,
                  const std::string& out_path) {
  const fog::MeanIouOptions opts = iou_options(classes_csv, void_label);

  auto sidecar_of = [](const std::string& png) {
    return fs::path(png).replace_extension(".json").string();
  };

  fog::IouAccumulator acc;
  size_t pairs = 0;
  if (!pairs_path.empty()) {
    std::istringstream in(fog::read_text_file(pairs_path));
    const std::string base = fs::path(pairs_path).parent_path().string();
    auto resolve = [&](const std::string& p) {
      return fs::path(p).is_absolute() ? p : (fs::path(base) / p).string();
    };
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string pred, truth;
      std::getline(ls, pred, '\t');
      std::getline(ls, truth, '\t');
      const std::string p = resolve(pred), t = resolve(truth);
      acc.add(fog::read_labels(p, sidecar_of(p)), fog::read_labels(t, sidecar_of(t)), opts);
      ++pairs;
    }
  }
  if (!pred_png.empty()) {
    acc.add(fog::read_labels(pred_png, sidecar_of(pred_png)),
            fog::read_labels(truth_png, sidecar_of(truth_png)), opts);
    ++pairs;
  }
  if (pairs == 0) throw std::runtime_error("eval-miou: no prediction/truth pairs given");

  if (!fs::path(out_path).parent_path().empty())
    fs::create_directories(fs::path(out_path).parent_path());
  const double miou = acc.mean_iou(opts);
  json j;
  j["pairs"] = pairs;
  j["miou"] = miou;
  for (const auto& [cls, iou] : acc.per_class_iou(opts))
    j["per_class"][std::to_string(cls)] = iou;
  fog::write_text_file(out_path, j.dump(2) + "\n");
  std::cerr << "mIoU over " << pairs << " pair(s): " << miou << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fog simulation, density estimation and curriculum adaptation toolkit"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--seed", g.seed, "seed for all randomness")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker parallelism cap")->capture_default_str();

  fog::SimulationParams sim;

  // make-toy-corpus
  auto* mk = app.add_subcommand("make-toy-corpus", "generate the procedural toy benchmark corpus");
  std::string mk_out;
  int mk_clear = 24, mk_real = 60, mk_test = 12, mk_w = 128, mk_h = 128;
  mk->add_option("--out", mk_out, "output directory")->required();
  mk->add_option("--clear", mk_clear, "clear-weather scene count")->capture_default_str();
  mk->add_option("--real", mk_real, "real-foggy image count")->capture_default_str();
  mk->add_option("--test", mk_test, "dense-fog test image count")->capture_default_str();
  mk->add_option("--width", mk_w)->capture_default_str();
  mk->add_option("--height", mk_h)->capture_default_str();

  // simulate
  auto* sc = app.add_subcommand("simulate", "render synthetic fog over a labeled clear corpus");
  std::string sc_corpus, sc_out, sc_hist;
  double sc_beta = 0.01;
  int sc_hist_bins = 64;
  sc->add_option("--corpus", sc_corpus, "clear corpus JSON")->required();
  sc->add_option("--beta", sc_beta, "attenuation coefficient (1/m)")->required();
  sc->add_option("--out", sc_out, "output directory")->required();
  sc->add_option("--mu", sim.filter.mu, "color-term weight")->capture_default_str();
  sc->add_option("--sigma-s", sim.filter.sigma_s, "spatial sigma (px)")->capture_default_str();
  sc->add_option("--sigma-c", sim.filter.sigma_c, "color sigma (CIELAB)")->capture_default_str();
  sc->add_option("--slic-k", sim.slic.k, "superpixel count (0 = auto)")->capture_default_str();
  sc->add_option("--ransac-iters", sim.ransac.iters)->capture_default_str();
  sc->add_option("--hist-out", sc_hist, "also write the scene-distance histogram (file name)");
  sc->add_option("--hist-bins", sc_hist_bins)->capture_default_str();

  // fit-density
  auto* fd = app.add_subcommand("fit-density", "train the fog density estimator on simulated fog");
  std::string fd_corpus, fd_betas = "0,0.005,0.01,0.02", fd_out;
  double fd_lambda = 1e-3;
  fd->add_option("--corpus", fd_corpus, "clear corpus JSON")->required();
  fd->add_option("--betas", fd_betas, "comma-separated training levels")->capture_default_str();
  fd->add_option("--lambda", fd_lambda, "ridge regularizer")->capture_default_str();
  fd->add_option("--out", fd_out, "model file to write")->required();

  // estimate-density / rank
  std::string ed_model, ed_list, ed_out;
  std::vector<std::string> ed_images;
  auto* ed = app.add_subcommand("estimate-density", "per-image density estimates (input order)");
  auto* rk = app.add_subcommand("rank", "order images by increasing estimated fog density");
  for (auto* cmd : {ed, rk}) {
    cmd->add_option("--model", ed_model, "density model file")->required();
    cmd->add_option("--list", ed_list, "real-corpus JSON or newline-separated image list");
    cmd->add_option("--out", ed_out, "output TSV (path<TAB>beta<TAB>percentile)")->required();
    cmd->add_option("images", ed_images, "image files");
  }

  // densify
  auto* dn = app.add_subcommand("densify", "increase fog density of real foggy images");
  std::string dn_model, dn_hist, dn_list, dn_out;
  std::vector<std::string> dn_images;
  double dn_prev = 0.005, dn_next = 0.01;
  dn->add_option("--model", dn_model, "density model file")->required();
  dn->add_option("--hist", dn_hist, "distance histogram file")->required();
  dn->add_option("--beta-prev", dn_prev, "stage lower density")->required();
  dn->add_option("--beta-next", dn_next, "stage target density")->required();
  dn->add_option("--list", dn_list, "real-corpus JSON or image list");
  dn->add_option("--out", dn_out, "output directory")->required();
  dn->add_option("images", dn_images, "image files");

  // curriculum-run
  auto* cr = app.add_subcommand("curriculum-run", "run the staged adaptation pipeline");
  std::string cr_config, cr_out;
  int cr_epochs = 40;
  cr->add_option("--config", cr_config, "declarative run config JSON (overrides flags)")
      ->required();
  cr->add_option("--out", cr_out, "output directory (config out_dir wins)");
  cr->add_option("--epochs", cr_epochs, "epochs per stage")->capture_default_str();

  // select-model
  auto* sm = app.add_subcommand("select-model", "route each image to the clear or fog expert");
  std::string sm_clear, sm_fog, sm_density, sm_list, sm_out;
  std::vector<std::string> sm_images;
  double sm_threshold = 0.0025;
  sm->add_option("--clear-model", sm_clear, "clear-weather expert checkpoint")->required();
  sm->add_option("--fog-model", sm_fog, "fog expert checkpoint")->required();
  sm->add_option("--density-model", sm_density, "density model file")->required();
  sm->add_option("--threshold", sm_threshold, "clear/fog decision threshold on beta")
      ->capture_default_str();
  sm->add_option("--list", sm_list, "real-corpus JSON or image list");
  sm->add_option("--out", sm_out, "output directory")->required();
  sm->add_option("images", sm_images, "image files");

  // eval-miou
  auto* ev = app.add_subcommand("eval-miou", "mean intersection-over-union of label maps");
  std::string ev_pairs, ev_pred, ev_truth, ev_classes, ev_out;
  int ev_void = fog::kVoidLabel;
  ev->add_option("--pairs", ev_pairs, "TSV of pred<TAB>truth label-map paths");
  ev->add_option("--pred", ev_pred, "single prediction label map");
  ev->add_option("--truth", ev_truth, "single truth label map");
  ev->add_option("--classes", ev_classes, "restrict the mean to these class ids (csv)");
  ev->add_option("--void", ev_void, "void label ignored in truth (-1 disables)")
      ->capture_default_str();
  ev->add_option("--out", ev_out, "metrics JSON to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage errors exit 2, --help/--version exit 0
  }

  try {
    if (*mk) return cmd_make_toy_corpus(g, mk_out, mk_clear, mk_real, mk_test, mk_w, mk_h);
    if (*sc) return cmd_simulate(g, sc_corpus, sc_beta, sc_out, sim, sc_hist, sc_hist_bins);
    if (*fd) return cmd_fit_density(g, fd_corpus, fd_betas, fd_lambda, fd_out, sim);
    if (*ed) return cmd_density_scores(g, "estimate-density", false, ed_model, ed_images, ed_list, ed_out);
    if (*rk) return cmd_density_scores(g, "rank", true, ed_model, ed_images, ed_list, ed_out);
    if (*dn) return cmd_densify(g, dn_model, dn_hist, dn_prev, dn_next, dn_images, dn_list, dn_out);
    if (*cr) return cmd_curriculum_run(g, cr_config, cr_out, cr_epochs);
    if (*sm)
      return cmd_select_model(g, sm_clear, sm_fog, sm_density, sm_threshold, sm_images, sm_list,
                              sm_out);
    if (*ev) return cmd_eval_miou(g, ev_pairs, ev_pred, ev_truth, ev_classes, ev_void, ev_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
