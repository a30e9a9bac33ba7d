#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rigscan/layers.hpp"
#include "rigscan/rng.hpp"
#include "rigscan/tensor.hpp"

namespace rigscan {

struct ImageShape {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;

  bool operator==(const ImageShape&) const = default;
};

// Conv blocks followed by a dense head and a single sigmoid unit. The
// default value is the collusion classifier: three 3x3 conv layers with
// 8/16/32 filters, 2x2 max pooling after the first two, then dense layers
// of 128/64/32 ReLU units.
struct ArchitectureSpec {
  std::vector<std::size_t> conv_filters{8, 16, 32};
  std::size_t kernel = 3;
  std::size_t pool = 2;
  std::size_t pooled_convs = 2;  // pooling follows the first N conv layers
  std::vector<std::size_t> hidden_units{128, 64, 32};
};

// Ordered layer stack with a validated shape chain.
class Network {
 public:
  Network() = default;
  // Throws ShapeMismatch if any layer cannot consume its predecessor's output
  // or the stack does not end in a SigmoidOutput layer.
  Network(ImageShape input, std::vector<LayerParams> layers);

  const ImageShape& input_shape() const noexcept { return input_; }
  const std::vector<LayerParams>& layers() const noexcept { return layers_; }
  // Parameter values may be edited in place; shapes must not change.
  LayerParams& layer(std::size_t i) { return layers_.at(i); }

  // shapes[0] is the input, shapes[i + 1] the output of layer i (no batch axis).
  const std::vector<std::vector<std::size_t>>& activation_shapes() const noexcept { return shapes_; }

  // Width of the Flatten layer's output (0 if there is none).
  std::size_t flatten_width() const;
  std::size_t parameter_count() const;

  bool operator==(const Network& other) const { return input_ == other.input_ && layers_ == other.layers_; }

 private:
  ImageShape input_;
  std::vector<LayerParams> layers_;
  std::vector<std::vector<std::size_t>> shapes_;
};

// Zero-weight network for the given architecture and input.
Network build_network(ImageShape input, const ArchitectureSpec& spec = {});

// He-uniform weights for ReLU layers, Xavier-uniform for the sigmoid output,
// zero biases. Draws in layer order, weights in storage order.
void initialize_weights(Network& net, Rng& rng);

// Per-layer weight and bias gradients; empty tensors for parameter-free layers.
struct Gradients {
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  static Gradients zeros_like(const Network& net);
  void zero();
};

// Reusable activations and buffers of one forward/backward pass.
struct ForwardCache {
  std::vector<Tensor> activations;
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<double> scratch;
  Tensor delta;
  Tensor delta_next;
};

// batch: [N, C, H, W]. Returns one probability per sample.
std::vector<double> forward(const Network& net, const Tensor& batch, ForwardCache& cache);
std::vector<double> forward(const Network& net, const Tensor& batch);

struct BatchResult {
  double loss = 0.0;  // mean binary cross-entropy
  std::vector<double> probabilities;
};

// Forward pass plus exact reverse-mode gradients of the mean batch loss.
// grads is overwritten. Per-sample contributions are summed in sample order.
BatchResult forward_backward(const Network& net, const Tensor& batch, std::span<const double> labels,
                             ForwardCache& cache, Gradients& grads);

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

// Single sample, input [C, H, W].
LossAndGradients backward(const Network& net, const Tensor& input, double label);
double sample_loss(const Network& net, const Tensor& input, double label);

}  // namespace rigscan
