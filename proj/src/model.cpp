#include "rigscan/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <ostream>

#include "rigscan/error.hpp"
#include "rigscan/rng.hpp"

namespace rigscan {

CnnModel make_model(std::size_t input_size, const ArchitectureSpec& architecture) {
  return CnnModel{build_network(ImageShape{1, input_size, input_size}, architecture), 0.5};
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation fraction must lie strictly between 0 and 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
  optimizer.validate();
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "epoch,loss,train_acc,val_acc\n";
  char buf[128];
  for (const EpochStats& e : epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.10f,%.6f,%.6f\n", e.epoch, e.loss, e.train_accuracy,
                  e.validation_accuracy);
    out << buf;
  }
}

ClassLabel classify(double probability, double threshold) {
  return probability >= threshold ? ClassLabel::Collusive : ClassLabel::Competitive;
}

namespace {

double label_value(ClassLabel label) { return label == ClassLabel::Collusive ? 1.0 : 0.0; }

void check_image(const CnnModel& model, const GrayscaleImage& img) {
  const ImageShape& s = model.network.input_shape();
  if (img.width != s.width || img.height != s.height)
    throw ShapeMismatch("image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                        ", model expects " + std::to_string(s.width) + "x" + std::to_string(s.height));
}

// Packs the selected images into a [N, 1, H, W] batch.
template <typename Get>
Tensor pack(std::size_t count, std::size_t h, std::size_t w, Get&& get) {
  Tensor batch({count, 1, h, w});
  for (std::size_t i = 0; i < count; ++i) {
    const GrayscaleImage& img = get(i);
    std::copy(img.pixels.begin(), img.pixels.end(), batch.data() + i * h * w);
  }
  return batch;
}

constexpr std::size_t kPredictChunk = 64;

}  // namespace

TrainResult train(std::span<const LabeledImage> images, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  std::size_t positives = 0, negatives = 0;
  for (const LabeledImage& item : images) {
    if (item.label == ClassLabel::Collusive) ++positives;
    else if (item.label == ClassLabel::Competitive) ++negatives;
    else throw InsufficientData("training images must be labeled collusive or competitive");
  }
  if (positives < 2 || negatives < 2)
    throw InsufficientData("training needs at least two images per class (got " + std::to_string(positives) +
                           " collusive, " + std::to_string(negatives) + " competitive)");
  const std::size_t size = images.front().image.width;
  for (const LabeledImage& item : images)
    if (item.image.width != size || item.image.height != size)
      throw ShapeMismatch("training images must all be square and of equal size");

  TrainResult result;
  result.model = make_model(size, config.architecture);
  result.model.threshold = config.threshold;
  Network& net = result.model.network;

  Rng init_rng(derive_seed(config.seed, 0));
  Rng split_rng(derive_seed(config.seed, 1));
  Rng shuffle_rng(derive_seed(config.seed, 2));
  initialize_weights(net, init_rng);

  const std::size_t n = images.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  split_rng.shuffle(order);
  const auto n_val = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(n))), 1, n - 1);
  const std::vector<std::size_t> validation(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> training(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(training.begin(), training.end());
  result.report.training_samples = training.size();
  result.report.validation_samples = validation.size();

  OptimizerState state;
  ForwardCache cache;
  Gradients grads = Gradients::zeros_like(net);
  std::vector<double> labels;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(training);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < training.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, training.size() - start);
      const Tensor batch = pack(count, size, size, [&](std::size_t i) -> const GrayscaleImage& {
        return images[training[start + i]].image;
      });
      labels.resize(count);
      for (std::size_t i = 0; i < count; ++i) labels[i] = label_value(images[training[start + i]].label);

      const BatchResult r = forward_backward(net, batch, labels, cache, grads);
      loss_sum += r.loss * static_cast<double>(count);
      for (std::size_t i = 0; i < count; ++i)
        if (classify(r.probabilities[i], config.threshold) == images[training[start + i]].label) ++correct;
      sgd_step(net, grads, state, config.optimizer);
    }

    std::size_t val_correct = 0;
    for (std::size_t start = 0; start < validation.size(); start += kPredictChunk) {
      const std::size_t count = std::min(kPredictChunk, validation.size() - start);
      const Tensor batch = pack(count, size, size, [&](std::size_t i) -> const GrayscaleImage& {
        return images[validation[start + i]].image;
      });
      const auto probs = forward(net, batch, cache);
      for (std::size_t i = 0; i < count; ++i)
        if (classify(probs[i], config.threshold) == images[validation[start + i]].label) ++val_correct;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>(training.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(training.size());
    stats.validation_accuracy = static_cast<double>(val_correct) / static_cast<double>(validation.size());
    result.report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

Prediction predict(const CnnModel& model, const GrayscaleImage& image) {
  const GrayscaleImage* one[1] = {&image};
  return predict_batch(model, one).front();
}

std::vector<Prediction> predict_batch(const CnnModel& model, std::span<const GrayscaleImage* const> images) {
  std::vector<Prediction> out;
  out.reserve(images.size());
  for (const GrayscaleImage* img : images) check_image(model, *img);
  const ImageShape& s = model.network.input_shape();
  ForwardCache cache;
  for (std::size_t start = 0; start < images.size(); start += kPredictChunk) {
    const std::size_t count = std::min(kPredictChunk, images.size() - start);
    const Tensor batch =
        pack(count, s.height, s.width, [&](std::size_t i) -> const GrayscaleImage& { return *images[start + i]; });
    for (double p : forward(model.network, batch, cache)) out.push_back(Prediction{p, classify(p, model.threshold)});
  }
  return out;
}

std::vector<Prediction> predict_batch(const CnnModel& model, std::span<const LabeledImage> images) {
  std::vector<const GrayscaleImage*> ptrs;
  ptrs.reserve(images.size());
  for (const LabeledImage& item : images) ptrs.push_back(&item.image);
  return predict_batch(model, ptrs);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr unsigned char kMagic[4] = {'R', 'G', 'S', 'N'};

std::uint64_t fnv1a(std::span<const unsigned char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<unsigned char> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::uint64_t take(std::size_t n) {
    if (remaining() < n) throw IoError("model file is malformed (unexpected end of data)");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> serialize_model(const CnnModel& model) {
  Writer w;
  w.bytes.assign(std::begin(kMagic), std::end(kMagic));
  w.u32(kModelFormatVersion);
  const ImageShape& s = model.network.input_shape();
  w.u32(static_cast<std::uint32_t>(s.channels));
  w.u32(static_cast<std::uint32_t>(s.height));
  w.u32(static_cast<std::uint32_t>(s.width));
  w.f64(model.threshold);

  const auto& layers = model.network.layers();
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const LayerParams& p : layers) {
    w.u32(static_cast<std::uint32_t>(p.kind));
    w.u32(p.relu ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(p.kernel));
    w.u32(static_cast<std::uint32_t>(p.filters));
    w.u32(static_cast<std::uint32_t>(p.pool));
    w.u32(static_cast<std::uint32_t>(p.units));
    w.u32(static_cast<std::uint32_t>(p.weights.rank()));
    for (std::size_t d : p.weights.shape()) w.u32(static_cast<std::uint32_t>(d));
    w.u32(static_cast<std::uint32_t>(p.biases.size()));
  }
  for (const LayerParams& p : layers) {
    for (double v : p.weights.values()) w.f64(v);
    for (double v : p.biases.values()) w.f64(v);
  }
  w.u64(fnv1a(w.bytes));
  return std::move(w.bytes);
}

CnnModel deserialize_model(std::span<const unsigned char> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    throw IoError("not a model file (missing RGSN magic)");
  if (bytes.size() >= 8) {
    const std::uint32_t version = Reader(bytes.subspan(4, 4)).u32();
    if (version != kModelFormatVersion)
      throw VersionMismatch("model format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(kModelFormatVersion) + ")");
  }
  if (bytes.size() < 16) throw ChecksumMismatch("model file is truncated");
  const auto body = bytes.first(bytes.size() - 8);
  if (Reader(bytes.last(8)).u64() != fnv1a(body)) throw ChecksumMismatch("model file checksum does not match");

  Reader r(body.subspan(8));
  ImageShape shape;
  shape.channels = r.u32();
  shape.height = r.u32();
  shape.width = r.u32();
  const double threshold = r.f64();
  const std::uint32_t count = r.u32();
  if (count > 4096) throw IoError("model file is malformed (layer count)");

  std::vector<LayerParams> layers(count);
  for (LayerParams& p : layers) {
    const std::uint32_t kind = r.u32();
    if (kind > static_cast<std::uint32_t>(LayerKind::SigmoidOutput)) throw IoError("model file has an unknown layer kind");
    p.kind = static_cast<LayerKind>(kind);
    p.relu = r.u32() != 0;
    p.kernel = r.u32();
    p.filters = r.u32();
    p.pool = r.u32();
    p.units = r.u32();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw IoError("model file is malformed (weight rank)");
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = r.u32();
    const std::uint32_t bias_count = r.u32();
    if (rank > 0) p.weights = Tensor(dims);
    if (bias_count > 0) p.biases = Tensor({bias_count});
    if (p.weights.size() > r.remaining() / 8) throw IoError("model file is malformed (weight count)");
  }
  for (LayerParams& p : layers) {
    for (double& v : p.weights.values()) v = r.f64();
    for (double& v : p.biases.values()) v = r.f64();
  }
  if (r.remaining() != 0) throw IoError("model file has trailing data");
  return CnnModel{Network(shape, std::move(layers)), threshold};
}

void save_model(const CnnModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

CnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_model(bytes);
}

}  // namespace rigscan
