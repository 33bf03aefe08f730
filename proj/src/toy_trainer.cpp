#include "fog/curriculum.hpp"
#include "fog/io.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace fog {

namespace {

// Feature layout: box means of each channel at windows 1/5/15, normalized
// x and y, constant bias.
constexpr int kWindows[] = {1, 5, 15};
constexpr Eigen::Index kFeatures = 3 * 3 + 2 + 1;

ArrayXX box_mean(const ArrayXX& in, int window) {
  if (window <= 1) return in;
  const int r = window / 2;
  const Eigen::Index h = in.rows(), w = in.cols();

  // Row-prefix then column-prefix sums with clamped borders.
  ArrayXX tmp(h, w);
  for (Eigen::Index x = 0; x < w; ++x) {
    double acc = 0;
    std::vector<double> prefix(static_cast<size_t>(h) + 1, 0.0);
    for (Eigen::Index y = 0; y < h; ++y) {
      acc += in(y, x);
      prefix[static_cast<size_t>(y) + 1] = acc;
    }
    for (Eigen::Index y = 0; y < h; ++y) {
      const Eigen::Index y0 = std::max<Eigen::Index>(0, y - r);
      const Eigen::Index y1 = std::min<Eigen::Index>(h - 1, y + r);
      tmp(y, x) = (prefix[static_cast<size_t>(y1) + 1] - prefix[static_cast<size_t>(y0)]) /
                  static_cast<double>(y1 - y0 + 1);
    }
  }
  ArrayXX out(h, w);
  std::vector<double> prefix(static_cast<size_t>(w) + 1, 0.0);
  for (Eigen::Index y = 0; y < h; ++y) {
    double acc = 0;
    for (Eigen::Index x = 0; x < w; ++x) {
      acc += tmp(y, x);
      prefix[static_cast<size_t>(x) + 1] = acc;
    }
    for (Eigen::Index x = 0; x < w; ++x) {
      const Eigen::Index x0 = std::max<Eigen::Index>(0, x - r);
      const Eigen::Index x1 = std::min<Eigen::Index>(w - 1, x + r);
      out(y, x) = (prefix[static_cast<size_t>(x1) + 1] - prefix[static_cast<size_t>(x0)]) /
                  static_cast<double>(x1 - x0 + 1);
    }
  }
  return out;
}

// n x F feature matrix for the whole image, pixel index = y * w + x.
MatX image_features(const RgbImage& img) {
  const Eigen::Index h = img.height(), w = img.width();
  MatX feats(h * w, kFeatures);
  Eigen::Index col = 0;
  for (int win : kWindows) {
    for (const ArrayXX* ch : {&img.r, &img.g, &img.b}) {
      const ArrayXX m = box_mean(*ch, win);
      for (Eigen::Index x = 0; x < w; ++x)
        for (Eigen::Index y = 0; y < h; ++y) feats(y * w + x, col) = m(y, x);
      ++col;
    }
  }
  for (Eigen::Index x = 0; x < w; ++x) {
    for (Eigen::Index y = 0; y < h; ++y) {
      feats(y * w + x, col) = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      feats(y * w + x, col + 1) = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
      feats(y * w + x, col + 2) = 1.0;
    }
  }
  return feats;
}

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t v = seed ^ (salt * 0x9e3779b97f4a7c15ull);
  v ^= v >> 30;
  v *= 0xbf58476d1ce4e5b9ull;
  v ^= v >> 27;
  return v ^ (v >> 31);
}

double cross_entropy(const MatX& logits, const std::vector<int>& labels) {
  double loss = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double lse = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) lse += std::exp(logits(i, c) - mx);
    loss += std::log(lse) + mx - logits(i, labels[static_cast<size_t>(i)]);
  }
  return loss / static_cast<double>(logits.rows());
}

}  // namespace

Eigen::Index ToyTrainer::feature_count() { return kFeatures; }

ToyTrainer::ToyTrainer(const Config& cfg) : cfg_(cfg) {
  if (cfg.num_classes < 2) throw std::invalid_argument("toy trainer: need >= 2 classes");
  weights_ = MatX::Zero(cfg.num_classes, kFeatures);
}

void ToyTrainer::train(const std::vector<TrainSample>& data, int epochs) {
  if (epochs <= 0) return;
  if (data.empty()) throw std::invalid_argument("toy trainer: empty training set");

  // Assemble the pixel sample once; epochs iterate on this fixed design.
  std::vector<Eigen::Index> rows;
  std::vector<int> labels;
  MatX x;
  {
    std::vector<MatX> blocks;
    for (size_t s = 0; s < data.size(); ++s) {
      const auto& sample = data[s];
      const SemanticLabeling cls = sample.labels.class_view();
      const Eigen::Index w = sample.image.width();
      std::vector<Eigen::Index> pool;
      for (Eigen::Index x2 = 0; x2 < cls.width(); ++x2)
        for (Eigen::Index y = 0; y < cls.height(); ++y)
          if (cls.ids(y, x2) != kVoidLabel && cls.ids(y, x2) < cfg_.num_classes)
            pool.push_back(y * w + x2);
      if (pool.empty()) continue;

      std::mt19937_64 rng(mix_seed(cfg_.seed, s + 1));
      std::shuffle(pool.begin(), pool.end(), rng);
      const size_t take = std::min<size_t>(pool.size(), static_cast<size_t>(cfg_.pixels_per_image));

      const MatX feats = image_features(sample.image);
      MatX block(static_cast<Eigen::Index>(take), kFeatures);
      for (size_t i = 0; i < take; ++i) {
        block.row(static_cast<Eigen::Index>(i)) = feats.row(pool[i]);
        labels.push_back(cls.ids(pool[i] / w, pool[i] % w));
      }
      blocks.push_back(std::move(block));
    }
    if (blocks.empty()) throw std::invalid_argument("toy trainer: no labeled pixels to train on");
    Eigen::Index total = 0;
    for (const auto& b : blocks) total += b.rows();
    x.resize(total, kFeatures);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
      x.middleRows(at, b.rows()) = b;
      at += b.rows();
    }
  }

  const auto n = x.rows();
  MatX onehot = MatX::Zero(n, cfg_.num_classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[static_cast<size_t>(i)]) = 1.0;

  double lr = cfg_.learning_rate;
  MatX logits = x * weights_.transpose();
  double loss = cross_entropy(logits, labels);
  loss_history_.clear();

  for (int epoch = 0; epoch < epochs; ++epoch) {
    // softmax probabilities
    MatX probs = logits;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mx = probs.row(i).maxCoeff();
      probs.row(i) = (probs.row(i).array() - mx).exp();
      probs.row(i) /= probs.row(i).sum();
    }
    const MatX grad = (probs - onehot).transpose() * x / static_cast<double>(n);

    // Backtracking keeps the loss non-increasing on the fixed sample.
    MatX candidate;
    double new_loss = loss;
    for (int tries = 0; tries < 40; ++tries) {
      candidate = weights_ - lr * grad;
      logits = x * candidate.transpose();
      new_loss = cross_entropy(logits, labels);
      if (new_loss <= loss + 1e-12) break;
      lr *= 0.5;
    }
    if (new_loss > loss + 1e-12) {  // gradient no longer improves; stop early
      logits = x * weights_.transpose();
      loss_history_.push_back(loss);
      break;
    }
    weights_ = candidate;
    loss = new_loss;
    loss_history_.push_back(loss);
    lr = std::min(lr * 1.2, 64.0);
  }
}

MatX ToyTrainer::logits_for(const RgbImage& img) const {
  return image_features(img) * weights_.transpose();
}

SemanticLabeling ToyTrainer::predict(const RgbImage& img) const {
  const MatX logits = logits_for(img);
  const Eigen::Index w = img.width();
  SemanticLabeling out(img.height(), img.width(), cfg_.num_classes);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    out.ids(i / w, i % w) = static_cast<int>(best);
  }
  return out;
}

std::pair<SemanticLabeling, ArrayXX> ToyTrainer::predict_with_confidence(
    const RgbImage& img) const {
  const MatX logits = logits_for(img);
  const Eigen::Index w = img.width();
  SemanticLabeling out(img.height(), img.width(), cfg_.num_classes);
  ArrayXX conf(img.height(), img.width());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    const double mx = logits.row(i).maxCoeff(&best);
    const double lse = (logits.row(i).array() - mx).exp().sum();
    out.ids(i / w, i % w) = static_cast<int>(best);
    conf(i / w, i % w) = 1.0 / lse;
  }
  return {out, conf};
}

void ToyTrainer::save(const std::string& path) const {
  std::ostringstream out;
  out << "fog-toy-trainer 1\n";
  out << cfg_.num_classes << " " << kFeatures << " " << cfg_.pixels_per_image << " "
      << format_double(cfg_.learning_rate) << " " << cfg_.seed << "\n";
  for (Eigen::Index c = 0; c < weights_.rows(); ++c) {
    for (Eigen::Index f = 0; f < weights_.cols(); ++f) {
      if (f) out << " ";
      out << format_double(weights_(c, f));
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

void ToyTrainer::load(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "fog-toy-trainer" || version != 1)
    throw std::runtime_error(path + ": not a fog-toy-trainer v1");
  Eigen::Index features = 0;
  in >> cfg_.num_classes >> features >> cfg_.pixels_per_image >> cfg_.learning_rate >> cfg_.seed;
  if (features != kFeatures) throw std::runtime_error(path + ": feature layout mismatch");
  weights_.resize(cfg_.num_classes, kFeatures);
  for (Eigen::Index c = 0; c < weights_.rows(); ++c)
    for (Eigen::Index f = 0; f < weights_.cols(); ++f) in >> weights_(c, f);
  if (!in) throw std::runtime_error(path + ": truncated trainer file");
  loss_history_.clear();
}

std::unique_ptr<TrainableModel> ToyTrainer::clone() const {
  return std::make_unique<ToyTrainer>(*this);
}

std::string ToyTrainer::state_digest() const {
  std::ostringstream out;
  out << cfg_.num_classes << "|" << cfg_.seed;
  for (Eigen::Index c = 0; c < weights_.rows(); ++c)
    for (Eigen::Index f = 0; f < weights_.cols(); ++f) out << "|" << format_double(weights_(c, f));
  return digest_string(out.str());
}

std::pair<SemanticLabeling, ArrayXX> SegmentationModel::predict_with_confidence(
    const RgbImage& img) const {
  SemanticLabeling labels = predict(img);
  return {labels, ArrayXX::Constant(img.height(), img.width(), 1.0)};
}

}  // namespace fog
