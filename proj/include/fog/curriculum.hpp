#pragma once

#include "fog/density.hpp"
#include "fog/densify.hpp"
#include "fog/optics.hpp"
#include "fog/types.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace fog {

// Domain sequence beta_1 = 0 (source) .. beta_Z (ultimate target), strictly
// ascending. densify_enabled switches the real stream to densified images.
struct CurriculumSchedule {
  std::vector<Scalar> betas;
  bool densify_enabled = false;
  Scalar w = 1.0;  // relative weight of one real sample vs one synthetic

  int stages() const { return static_cast<int>(betas.size()); }      // Z
  int intermediate_domains() const { return stages() - 2; }          // K
  void validate() const;
  std::string digest() const;
};

// ---- corpora ----------------------------------------------------------------

struct SceneRecord {
  std::string image, labels_png, labels_sidecar, disparity, camera;
};

struct ClearCorpus {
  std::vector<SceneRecord> scenes;
  int num_classes = 0;
  std::optional<int> sky_label;
  std::string digest;
};

struct RealRecord {
  std::string image;
  std::optional<Scalar> true_beta;            // toy corpora record it for evaluation
  std::optional<std::string> gt_labels_png;   // evaluation only, never training
  std::optional<std::string> gt_labels_sidecar;
};

struct RealCorpus {
  std::vector<RealRecord> images;
  std::string digest;
};

ClearCorpus load_clear_corpus(const std::string& json_path);
RealCorpus load_real_corpus(const std::string& json_path);
LabeledScene load_scene(const SceneRecord& rec, std::optional<int> sky_label);

// ---- manifests ----------------------------------------------------------------

struct ManifestEntry {
  enum class Origin { Synthetic, Real, RealDensified };
  std::string image_path;  // relative to the manifest's directory
  std::string label_path;
  std::string label_sidecar;
  Origin origin = Origin::Synthetic;
  Scalar beta_l = 0;  // estimated input density (0 for synthetic)
  Scalar beta_d = 0;  // density of the written image
};

struct DatasetManifest {
  int stage_z = 0;
  std::vector<std::pair<std::string, std::string>> header;  // provenance keys
  std::vector<ManifestEntry> entries;

  void save(const std::string& path) const;
  static DatasetManifest load(const std::string& path);
};

std::string origin_name(ManifestEntry::Origin o);

// ---- segmentation model interface --------------------------------------------

struct TrainSample {
  RgbImage image;
  SemanticLabeling labels;  // class labels; kVoidLabel pixels are skipped
};

class SegmentationModel {
 public:
  virtual ~SegmentationModel() = default;
  virtual SemanticLabeling predict(const RgbImage& img) const = 0;
  // Labels plus per-pixel winning probability; default confidence is 1.
  virtual std::pair<SemanticLabeling, ArrayXX> predict_with_confidence(const RgbImage& img) const;
  virtual void save(const std::string& path) const = 0;
  virtual void load(const std::string& path) = 0;
  virtual std::string state_digest() const { return ""; }
};

class TrainableModel : public SegmentationModel {
 public:
  virtual void train(const std::vector<TrainSample>& data, int epochs) = 0;
  virtual std::unique_ptr<TrainableModel> clone() const = 0;
};

using TrainerFactory = std::function<std::unique_ptr<TrainableModel>()>;

// Reference trainer: per-pixel multinomial logistic regression over color
// window means and normalized position, trained by full-batch gradient
// descent with a backtracking step, so the cross-entropy loss is
// non-increasing over epochs on fixed data.
class ToyTrainer : public TrainableModel {
 public:
  struct Config {
    int num_classes = 5;
    int pixels_per_image = 1500;
    Scalar learning_rate = 1.0;
    uint64_t seed = 0;
  };

  ToyTrainer() = default;
  explicit ToyTrainer(const Config& cfg);

  void train(const std::vector<TrainSample>& data, int epochs) override;
  SemanticLabeling predict(const RgbImage& img) const override;
  std::pair<SemanticLabeling, ArrayXX> predict_with_confidence(const RgbImage& img) const override;
  void save(const std::string& path) const override;
  void load(const std::string& path) override;
  std::unique_ptr<TrainableModel> clone() const override;
  std::string state_digest() const override;

  const std::vector<Scalar>& loss_history() const { return loss_history_; }
  static Eigen::Index feature_count();

 private:
  Config cfg_;
  MatX weights_;  // num_classes x feature_count
  std::vector<Scalar> loss_history_;

  MatX logits_for(const RgbImage& img) const;
};

// ---- stage dataset construction ----------------------------------------------

// Depth/label/light state for every clear scene, computed once and reused
// across stages.
struct ScenePreparations {
  std::vector<LabeledScene> scenes;
  std::vector<PreparedScene> prepared;

  static ScenePreparations build(const ClearCorpus& corpus, const SimulationParams& params);
};

struct StageOptions {
  std::string out_dir;  // stage artifacts land in <out_dir>/stage_<z>/
  uint64_t seed = 0;
  SimulationParams sim;
  const DistanceHistogram* histogram = nullptr;  // required when densifying
  Scalar min_pseudo_confidence = 0;              // 0 disables pseudo-label filtering
  const ScenePreparations* prepared = nullptr;   // optional cache
  const DensityModel* density_model = nullptr;   // required from z >= 3
};

struct StageDatasets {
  DatasetManifest syn;
  DatasetManifest real;
};

// Realizes the per-stage training sets: synthetic fog at beta_z with
// inherited labels, and real images with estimated density <= beta_{z-1}
// pseudo-labeled by the previous stage's model (densified toward
// [beta_{z-1}, beta_z] when the schedule says so). Stage z = 2 has an empty
// real set.
StageDatasets build_stage_datasets(const CurriculumSchedule& schedule, int z,
                                   const ClearCorpus& clear_corpus, const RealCorpus& real_corpus,
                                   const SegmentationModel* prev_model,
                                   const StageOptions& options);

// ---- mixed training stream -----------------------------------------------------

// Infinite deterministic interleaving of the two manifests at expected ratio
// 1:w; each deck reshuffles with the seeded generator once exhausted.
class MixedStream {
 public:
  MixedStream(const DatasetManifest& syn, const DatasetManifest& real, Scalar w, uint64_t seed);

  const ManifestEntry& next();
  std::vector<ManifestEntry> take(size_t n);

  // Effective weight lambda = w * R / M of the real loss term.
  Scalar lambda() const;

 private:
  const DatasetManifest& syn_;
  const DatasetManifest& real_;
  Scalar w_;
  std::mt19937_64 rng_;
  std::vector<size_t> syn_order_, real_order_;
  size_t syn_cursor_ = 0, real_cursor_ = 0;

  void reshuffle(std::vector<size_t>& order);
};

// ---- evaluation ----------------------------------------------------------------

struct MeanIouOptions {
  std::optional<int> void_label = kVoidLabel;        // truth pixels to ignore
  std::optional<std::vector<int>> class_subset;      // e.g. the frequent classes
};

// Accumulates per-class confusion counts across images.
class IouAccumulator {
 public:
  void add(const SemanticLabeling& pred, const SemanticLabeling& truth,
           const MeanIouOptions& opts = {});
  Scalar mean_iou(const MeanIouOptions& opts = {}) const;
  std::vector<std::pair<int, Scalar>> per_class_iou(const MeanIouOptions& opts = {}) const;

 private:
  struct Counts {
    int64_t tp = 0, fp = 0, fn = 0;
  };
  std::map<int, Counts> counts_;
  int64_t scored_pixels_ = 0;
};

// Per-class IoU = TP / (TP + FP + FN) over non-void pixels, averaged over the
// classes present in truth or prediction (restricted to the subset if given).
Scalar mean_iou(const SemanticLabeling& pred, const SemanticLabeling& truth,
                const MeanIouOptions& opts = {});

// ---- orchestration --------------------------------------------------------------

struct CmadaOptions {
  std::string out_dir;
  uint64_t seed = 0;
  int epochs_per_stage = 40;
  int baseline_epochs = 0;  // epochs for the clear-weather phi^1; 0 => 4x epochs_per_stage
  SimulationParams sim;
  Scalar min_pseudo_confidence = 0;
  TrainerFactory trainer_factory;
  const std::vector<TrainSample>* eval_set = nullptr;  // optional labeled test set
  MeanIouOptions eval_options;
};

struct StageReport {
  int z = 0;
  Scalar beta = 0;
  size_t syn_count = 0, real_count = 0;
  Scalar lambda = 0;
  std::optional<Scalar> miou;
  std::string checkpoint;
};

struct CmadaResult {
  std::unique_ptr<TrainableModel> model;      // phi^Z
  std::unique_ptr<TrainableModel> baseline;   // phi^1 (clear weather)
  std::vector<StageReport> stages;
  std::string report_json, report_txt;
};

// Full curriculum: trains phi^1 on the clear corpus, then iterates
// z = 2..Z building stage datasets, streaming them 1:w and fine-tuning the
// previous stage's model. Writes per-stage checkpoints and a report.
CmadaResult run_cmada(const CurriculumSchedule& schedule, const ClearCorpus& clear_corpus,
                      const RealCorpus& real_corpus, const DensityModel& density_model,
                      const CmadaOptions& options);

// ---- model selection -------------------------------------------------------------

class WeatherClassifier {
 public:
  virtual ~WeatherClassifier() = default;
  virtual int classify(const RgbImage& img) const = 0;  // 1 = clear, 0 = fog
};

// Default classifier g: clear iff the estimated density falls below the
// threshold.
class DensityThresholdClassifier : public WeatherClassifier {
 public:
  DensityThresholdClassifier(DensityModel model, Scalar threshold)
      : model_(std::move(model)), threshold_(threshold) {}
  int classify(const RgbImage& img) const override {
    return predict_density(model_, img) < threshold_ ? 1 : 0;
  }

 private:
  DensityModel model_;
  Scalar threshold_;
};

// Midpoint between the median density estimates of known-clear and
// known-foggy training images; the 1-D analog of training the clear/fog
// classifier.
Scalar calibrate_clear_fog_threshold(const DensityModel& model,
                                     const std::vector<RgbImage>& clear_images,
                                     const std::vector<RgbImage>& foggy_images);

// phi^1(x) when g(x) = 1 (clear), phi^Z(x) otherwise.
SemanticLabeling model_select(const SegmentationModel& clear_model,
                              const SegmentationModel& fog_model, const WeatherClassifier& g,
                              const RgbImage& img);

}  // namespace fog
