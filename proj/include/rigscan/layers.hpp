#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rigscan/tensor.hpp"

namespace rigscan {

enum class LayerKind : std::uint32_t {
  Conv2D = 0,
  MaxPool2D = 1,
  Flatten = 2,
  Dense = 3,
  SigmoidOutput = 4,
};

const char* layer_kind_name(LayerKind kind);

// Parameters and hyper-parameters of one layer.
//   Conv2D:         weights [filters, in_channels, kernel, kernel], biases [filters]
//   Dense:          weights [units, in_features], biases [units]
//   SigmoidOutput:  a Dense layer with one unit followed by the logistic function
//   MaxPool2D, Flatten: no parameters
// Conv2D and Dense apply ReLU after the affine map when `relu` is set.
struct LayerParams {
  LayerKind kind = LayerKind::Flatten;
  std::size_t kernel = 0;
  std::size_t filters = 0;
  std::size_t pool = 0;
  std::size_t units = 0;
  bool relu = true;
  Tensor weights;
  Tensor biases;

  bool has_parameters() const noexcept {
    return kind == LayerKind::Conv2D || kind == LayerKind::Dense || kind == LayerKind::SigmoidOutput;
  }
  // Throws ShapeMismatch if weight shapes disagree with the hyper-parameters.
  void check() const;

  bool operator==(const LayerParams&) const = default;
};

// Zero-initialized layers; weight initialization is the network's job.
LayerParams conv2d_layer(std::size_t in_channels, std::size_t filters, std::size_t kernel);
LayerParams maxpool2d_layer(std::size_t pool = 2);
LayerParams flatten_layer();
LayerParams dense_layer(std::size_t in_features, std::size_t units);
LayerParams sigmoid_output_layer(std::size_t in_features);

// --- Single-sample reference operations -----------------------------------

// Valid, stride-1 cross-correlation of a [C,H,W] input; returns the
// pre-activation [F, H-k+1, W-k+1] map.
Tensor conv2d_forward(const Tensor& input, const LayerParams& params);

double relu(double x);
Tensor relu(const Tensor& x);

// Numerically stable logistic function.
double sigmoid(double x);

struct PoolResult {
  Tensor output;
  // Flat input offset of each output's maximum (first in row-major order on ties).
  std::vector<std::uint32_t> argmax;
};

// Non-overlapping pool x pool windows; trailing rows/columns are dropped.
PoolResult maxpool2d_forward(const Tensor& input, std::size_t pool = 2);

// W * input + b for a rank-1 input; returns the pre-activation vector.
Tensor dense_forward(const Tensor& input, const LayerParams& params);

inline constexpr double kBceEpsilon = 1e-7;

// Binary cross-entropy with the probability clamped to [eps, 1 - eps].
double bce_loss(double p, double y);

// --- Raw kernels shared by the batched network ----------------------------
namespace kernels {

// Doubles of scratch needed by conv2d_forward / conv2d_backward.
std::size_t conv2d_scratch_size(std::size_t channels, std::size_t height, std::size_t width,
                                const LayerParams& params);

void conv2d_forward(const double* in, std::size_t channels, std::size_t height, std::size_t width,
                    const LayerParams& params, double* out, double* scratch);

// Accumulates into dweights/dbias; din (nullable) receives the input gradient
// added to its current contents.
void conv2d_backward(const double* in, std::size_t channels, std::size_t height, std::size_t width,
                     const double* dout, const LayerParams& params, double* dweights, double* dbias,
                     double* din, double* scratch);

void maxpool_forward(const double* in, std::size_t channels, std::size_t height, std::size_t width,
                     std::size_t pool, double* out, std::uint32_t* argmax);

// Routes each output gradient to its recorded argmax; din must be zeroed.
void maxpool_backward(const double* dout, std::size_t count, const std::uint32_t* argmax, double* din);

// Y[s] = W X[s] + b for every sample s of a [batch, in] block.
void dense_forward(const double* x, std::size_t batch, const LayerParams& params, double* y);

// Accumulates dW, db in sample order; dx (nullable) is overwritten.
void dense_backward(const double* x, std::size_t batch, const double* dy, const LayerParams& params,
                    double* dweights, double* dbias, double* dx);

}  // namespace kernels
}  // namespace rigscan
