#include "rigscan/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "gemm.hpp"
#include "rigscan/error.hpp"

namespace rigscan {
namespace {

std::size_t conv_in_channels(const LayerParams& p) { return p.weights.extent(1); }

std::size_t dense_in_features(const LayerParams& p) { return p.weights.extent(1); }

}  // namespace

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::MaxPool2D: return "MaxPool2D";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Dense: return "Dense";
    case LayerKind::SigmoidOutput: return "SigmoidOutput";
  }
  return "?";
}

void LayerParams::check() const {
  auto fail = [&](const std::string& why) {
    throw ShapeMismatch(std::string(layer_kind_name(kind)) + " layer: " + why);
  };
  switch (kind) {
    case LayerKind::Conv2D:
      if (kernel == 0 || filters == 0) fail("kernel and filter count must be positive");
      if (weights.rank() != 4 || weights.extent(0) != filters || weights.extent(2) != kernel ||
          weights.extent(3) != kernel || weights.extent(1) == 0)
        fail("weights " + shape_string(weights.shape()) + " do not match " + std::to_string(filters) +
             " filters of " + std::to_string(kernel) + "x" + std::to_string(kernel));
      if (biases.rank() != 1 || biases.extent(0) != filters) fail("bias shape mismatch");
      break;
    case LayerKind::Dense:
    case LayerKind::SigmoidOutput:
      if (units == 0) fail("unit count must be positive");
      if (kind == LayerKind::SigmoidOutput && units != 1) fail("sigmoid output has exactly one unit");
      if (weights.rank() != 2 || weights.extent(0) != units || weights.extent(1) == 0)
        fail("weights " + shape_string(weights.shape()) + " do not match " + std::to_string(units) + " units");
      if (biases.rank() != 1 || biases.extent(0) != units) fail("bias shape mismatch");
      break;
    case LayerKind::MaxPool2D:
      if (pool == 0) fail("pool size must be positive");
      [[fallthrough]];
    case LayerKind::Flatten:
      if (!weights.empty() || !biases.empty()) fail("layer carries no parameters");
      break;
  }
}

LayerParams conv2d_layer(std::size_t in_channels, std::size_t filters, std::size_t kernel) {
  LayerParams p;
  p.kind = LayerKind::Conv2D;
  p.kernel = kernel;
  p.filters = filters;
  p.weights = Tensor({filters, in_channels, kernel, kernel});
  p.biases = Tensor({filters});
  return p;
}

LayerParams maxpool2d_layer(std::size_t pool) {
  LayerParams p;
  p.kind = LayerKind::MaxPool2D;
  p.pool = pool;
  p.relu = false;
  return p;
}

LayerParams flatten_layer() {
  LayerParams p;
  p.kind = LayerKind::Flatten;
  p.relu = false;
  return p;
}

LayerParams dense_layer(std::size_t in_features, std::size_t units) {
  LayerParams p;
  p.kind = LayerKind::Dense;
  p.units = units;
  p.weights = Tensor({units, in_features});
  p.biases = Tensor({units});
  return p;
}

LayerParams sigmoid_output_layer(std::size_t in_features) {
  LayerParams p = dense_layer(in_features, 1);
  p.kind = LayerKind::SigmoidOutput;
  p.relu = false;
  return p;
}

// ---------------------------------------------------------------------------
// Single-sample operations

Tensor conv2d_forward(const Tensor& input, const LayerParams& params) {
  if (params.kind != LayerKind::Conv2D) throw ShapeMismatch("conv2d_forward needs a Conv2D layer");
  params.check();
  if (input.rank() != 3) throw ShapeMismatch("conv2d input must be [C,H,W], got " + shape_string(input.shape()));
  const std::size_t c = input.extent(0), h = input.extent(1), w = input.extent(2), k = params.kernel;
  if (c != conv_in_channels(params))
    throw ShapeMismatch("conv2d expects " + std::to_string(conv_in_channels(params)) + " channels, got " +
                        std::to_string(c));
  if (h < k || w < k) throw ShapeMismatch("conv2d input smaller than kernel");
  Tensor out({params.filters, h - k + 1, w - k + 1});
  std::vector<double> scratch(kernels::conv2d_scratch_size(c, h, w, params));
  kernels::conv2d_forward(input.data(), c, h, w, params, out.data(), scratch.data());
  return out;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.values()) v = relu(v);
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

PoolResult maxpool2d_forward(const Tensor& input, std::size_t pool) {
  if (input.rank() != 3) throw ShapeMismatch("maxpool input must be [C,H,W], got " + shape_string(input.shape()));
  if (pool == 0) throw ShapeMismatch("pool size must be positive");
  const std::size_t c = input.extent(0), h = input.extent(1), w = input.extent(2);
  PoolResult r{Tensor({c, h / pool, w / pool}), {}};
  r.argmax.resize(r.output.size());
  kernels::maxpool_forward(input.data(), c, h, w, pool, r.output.data(), r.argmax.data());
  return r;
}

Tensor dense_forward(const Tensor& input, const LayerParams& params) {
  if (params.kind != LayerKind::Dense && params.kind != LayerKind::SigmoidOutput)
    throw ShapeMismatch("dense_forward needs a Dense layer");
  params.check();
  if (input.size() != dense_in_features(params))
    throw ShapeMismatch("dense layer expects " + std::to_string(dense_in_features(params)) + " inputs, got " +
                        std::to_string(input.size()));
  Tensor out({params.units});
  kernels::dense_forward(input.data(), 1, params, out.data());
  return out;
}

double bce_loss(double p, double y) {
  p = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

// ---------------------------------------------------------------------------
// Kernels
//
// Convolutions run over a row-extended output: position t = i*W + j covers
// every input column, so each kernel tap is a single contiguous sweep of
// length (Ho-1)*W + Wo. Columns j >= Wo are scratch and never read back.

namespace kernels {

std::size_t conv2d_scratch_size(std::size_t channels, std::size_t height, std::size_t width,
                                const LayerParams& params) {
  const std::size_t k = params.kernel;
  const std::size_t span = (height - k) * width + (width - k + 1);
  const std::size_t taps = channels * k * k;
  return params.filters * span + taps * span + taps * params.filters;
}

namespace {

std::vector<const double*> tap_rows(const double* in, std::size_t channels, std::size_t height,
                                    std::size_t width, std::size_t k) {
  std::vector<const double*> rows;
  rows.reserve(channels * k * k);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) rows.push_back(in + c * height * width + a * width + b);
  return rows;
}

}  // namespace

void conv2d_forward(const double* in, std::size_t channels, std::size_t height, std::size_t width,
                    const LayerParams& params, double* out, double* scratch) {
  const std::size_t k = params.kernel;
  const std::size_t ho = height - k + 1, wo = width - k + 1;
  const std::size_t span = (ho - 1) * width + wo;
  const std::size_t taps = channels * k * k;
  const std::size_t filters = params.filters;

  for (std::size_t f = 0; f < filters; ++f) std::fill(scratch + f * span, scratch + (f + 1) * span, params.biases[f]);
  const auto rows = tap_rows(in, channels, height, width, k);
  gemm::rows(filters, span, taps, params.weights.data(), taps, rows.data(), scratch, span);

  for (std::size_t f = 0; f < filters; ++f) {
    const double* src = scratch + f * span;
    double* dst = out + f * ho * wo;
    for (std::size_t i = 0; i < ho; ++i) std::memcpy(dst + i * wo, src + i * width, wo * sizeof(double));
  }
}

void conv2d_backward(const double* in, std::size_t channels, std::size_t height, std::size_t width,
                     const double* dout, const LayerParams& params, double* dweights, double* dbias,
                     double* din, double* scratch) {
  const std::size_t k = params.kernel;
  const std::size_t ho = height - k + 1, wo = width - k + 1;
  const std::size_t span = (ho - 1) * width + wo;
  const std::size_t taps = channels * k * k;
  const std::size_t filters = params.filters;

  double* dext = scratch;
  std::fill(dext, dext + filters * span, 0.0);
  std::vector<const double*> drows(filters);
  for (std::size_t f = 0; f < filters; ++f) {
    const double* g = dout + f * ho * wo;
    double* row = dext + f * span;
    double bias_grad = 0.0;
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        row[i * width + j] = g[i * wo + j];
        bias_grad += g[i * wo + j];
      }
    }
    dbias[f] += bias_grad;
    drows[f] = row;
  }

  const auto rows = tap_rows(in, channels, height, width, k);
  gemm::dots(filters, taps, span, drows.data(), rows.data(), dweights, taps);
  if (!din) return;

  // G = W^T D, then each tap row of G is added back at its input offset.
  double* g = dext + filters * span;
  double* wt = g + taps * span;
  const double* weights = params.weights.data();
  for (std::size_t f = 0; f < filters; ++f)
    for (std::size_t t = 0; t < taps; ++t) wt[t * filters + f] = weights[f * taps + t];
  std::fill(g, g + taps * span, 0.0);
  gemm::rows(taps, span, filters, wt, filters, drows.data(), g, span);
  for (std::size_t t = 0; t < taps; ++t) {
    double* dst = din + (rows[t] - in);
    const double* src = g + t * span;
#pragma omp simd
    for (std::size_t i = 0; i < span; ++i) dst[i] += src[i];
  }
}

void maxpool_forward(const double* in, std::size_t channels, std::size_t height, std::size_t width,
                     std::size_t pool, double* out, std::uint32_t* argmax) {
  const std::size_t ho = height / pool, wo = width / pool;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < ho; ++i) {
      for (std::size_t j = 0; j < wo; ++j) {
        std::size_t best = c * height * width + (i * pool) * width + j * pool;
        for (std::size_t a = 0; a < pool; ++a) {
          for (std::size_t b = 0; b < pool; ++b) {
            const std::size_t idx = c * height * width + (i * pool + a) * width + j * pool + b;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (c * ho + i) * wo + j;
        out[o] = in[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void maxpool_backward(const double* dout, std::size_t count, const std::uint32_t* argmax, double* din) {
  for (std::size_t o = 0; o < count; ++o) din[argmax[o]] += dout[o];
}

void dense_forward(const double* x, std::size_t batch, const LayerParams& params, double* y) {
  const std::size_t m = params.units;
  const std::size_t n = params.weights.extent(1);
  std::vector<const double*> xs(batch), ws(m);
  for (std::size_t s = 0; s < batch; ++s) {
    xs[s] = x + s * n;
    std::copy(params.biases.data(), params.biases.data() + m, y + s * m);
  }
  for (std::size_t o = 0; o < m; ++o) ws[o] = params.weights.data() + o * n;
  gemm::dots(batch, m, n, xs.data(), ws.data(), y, m);
}

void dense_backward(const double* x, std::size_t batch, const double* dy, const LayerParams& params,
                    double* dweights, double* dbias, double* dx) {
  const std::size_t m = params.units;
  const std::size_t n = params.weights.extent(1);
  std::vector<double> gt(m * batch);
  std::vector<const double*> xs(batch), ws(m);
  for (std::size_t s = 0; s < batch; ++s) {
    xs[s] = x + s * n;
    for (std::size_t o = 0; o < m; ++o) {
      gt[o * batch + s] = dy[s * m + o];
      dbias[o] += dy[s * m + o];
    }
  }
  gemm::rows(m, n, batch, gt.data(), batch, xs.data(), dweights, n);
  if (!dx) return;
  for (std::size_t o = 0; o < m; ++o) ws[o] = params.weights.data() + o * n;
  std::fill(dx, dx + batch * n, 0.0);
  gemm::rows(batch, n, m, dy, m, ws.data(), dx, n);
}

}  // namespace kernels
}  // namespace rigscan
