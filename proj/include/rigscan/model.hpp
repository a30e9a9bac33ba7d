#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "rigscan/bid_data.hpp"
#include "rigscan/manifest.hpp"
#include "rigscan/network.hpp"
#include "rigscan/optimizer.hpp"
#include "rigscan/raster.hpp"

namespace rigscan {

// Collusion classifier over square grayscale images.
struct CnnModel {
  Network network;
  double threshold = 0.5;

  std::size_t input_size() const noexcept { return network.input_shape().height; }
  bool operator==(const CnnModel&) const = default;
};

// Untrained model with all weights zero (predicts exactly 0.5).
CnnModel make_model(std::size_t input_size, const ArchitectureSpec& architecture = {});

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 16;
  double validation_fraction = 0.10;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  ArchitectureSpec architecture;

  void validate() const;  // throws ConfigError
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean training loss over the epoch's minibatches
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;

  bool operator==(const EpochStats&) const = default;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t training_samples = 0;
  std::size_t validation_samples = 0;

  // epoch,loss,train_acc,val_acc
  void write_csv(std::ostream& out) const;
  bool operator==(const TrainReport&) const = default;
};

struct TrainResult {
  CnnModel model;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Holds out a seeded validation subset once, then runs cfg.epochs passes of
// shuffled minibatches over the rest. Throws InsufficientData with fewer
// than two labeled images per class and ShapeMismatch on mixed image sizes.
TrainResult train(std::span<const LabeledImage> images, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct Prediction {
  double probability = 0.0;
  ClassLabel label = ClassLabel::Competitive;
};

// Collusive iff probability >= threshold.
ClassLabel classify(double probability, double threshold);

Prediction predict(const CnnModel& model, const GrayscaleImage& image);
std::vector<Prediction> predict_batch(const CnnModel& model, std::span<const GrayscaleImage* const> images);
std::vector<Prediction> predict_batch(const CnnModel& model, std::span<const LabeledImage> images);

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Binary format: "RGSN", u32 version, input shape, threshold, layer
// descriptor table, weights as little-endian IEEE-754 doubles, trailing
// FNV-1a 64 checksum of everything before it.
void save_model(const CnnModel& model, const std::filesystem::path& path);
CnnModel load_model(const std::filesystem::path& path);

std::vector<unsigned char> serialize_model(const CnnModel& model);
CnnModel deserialize_model(std::span<const unsigned char> bytes);

}  // namespace rigscan
