#include "rigscan/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rigscan/error.hpp"

namespace rigscan {
namespace {

std::vector<std::size_t> output_shape(const LayerParams& p, const std::vector<std::size_t>& in, std::size_t index) {
  auto fail = [&](const std::string& why) -> ShapeMismatch {
    return ShapeMismatch("layer " + std::to_string(index) + " (" + layer_kind_name(p.kind) + "): " + why +
                         ", input " + shape_string(in));
  };
  switch (p.kind) {
    case LayerKind::Conv2D: {
      if (in.size() != 3) throw fail("expects a [C,H,W] input");
      if (p.weights.extent(1) != in[0]) throw fail("channel count mismatch");
      if (in[1] < p.kernel || in[2] < p.kernel) throw fail("input smaller than kernel");
      return {p.filters, in[1] - p.kernel + 1, in[2] - p.kernel + 1};
    }
    case LayerKind::MaxPool2D: {
      if (in.size() != 3) throw fail("expects a [C,H,W] input");
      if (in[1] < p.pool || in[2] < p.pool) throw fail("input smaller than pool window");
      return {in[0], in[1] / p.pool, in[2] / p.pool};
    }
    case LayerKind::Flatten:
      return {shape_size(in)};
    case LayerKind::Dense:
    case LayerKind::SigmoidOutput: {
      if (in.size() != 1) throw fail("expects a flat input");
      if (p.weights.extent(1) != in[0]) throw fail("expects " + std::to_string(p.weights.extent(1)) + " inputs");
      return {p.units};
    }
  }
  throw fail("unknown layer kind");
}

std::vector<std::size_t> with_batch(std::size_t n, const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> out{n};
  out.insert(out.end(), shape.begin(), shape.end());
  return out;
}

void apply_relu(Tensor& t) {
  for (double& v : t.values()) v = v > 0.0 ? v : 0.0;
}

// Zeroes gradient entries whose ReLU output was not positive.
void mask_relu(Tensor& delta, const Tensor& activation) {
  double* d = delta.data();
  const double* a = activation.data();
  for (std::size_t i = 0; i < delta.size(); ++i)
    if (!(a[i] > 0.0)) d[i] = 0.0;
}

void check_batch(const Network& net, const Tensor& batch) {
  const ImageShape& s = net.input_shape();
  if (batch.rank() != 4 || batch.extent(1) != s.channels || batch.extent(2) != s.height ||
      batch.extent(3) != s.width)
    throw ShapeMismatch("batch " + shape_string(batch.shape()) + " does not match network input [N," +
                        std::to_string(s.channels) + "," + std::to_string(s.height) + "," +
                        std::to_string(s.width) + "]");
  if (batch.extent(0) == 0) throw ShapeMismatch("empty batch");
}

}  // namespace

// ---------------------------------------------------------------------------

Network::Network(ImageShape input, std::vector<LayerParams> layers) : input_(input), layers_(std::move(layers)) {
  if (input_.channels == 0 || input_.height == 0 || input_.width == 0) throw ShapeMismatch("empty input shape");
  if (layers_.empty() || layers_.back().kind != LayerKind::SigmoidOutput)
    throw ShapeMismatch("network must end in a SigmoidOutput layer");
  shapes_.push_back({input_.channels, input_.height, input_.width});
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].check();
    if (layers_[i].kind == LayerKind::SigmoidOutput && i + 1 != layers_.size())
      throw ShapeMismatch("SigmoidOutput must be the last layer");
    shapes_.push_back(output_shape(layers_[i], shapes_.back(), i));
  }
}

std::size_t Network::flatten_width() const {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    if (layers_[i].kind == LayerKind::Flatten) return shapes_[i + 1][0];
  return 0;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const LayerParams& p : layers_) n += p.weights.size() + p.biases.size();
  return n;
}

Network build_network(ImageShape input, const ArchitectureSpec& spec) {
  std::vector<LayerParams> layers;
  std::size_t channels = input.channels;
  std::size_t h = input.height, w = input.width;
  for (std::size_t i = 0; i < spec.conv_filters.size(); ++i) {
    layers.push_back(conv2d_layer(channels, spec.conv_filters[i], spec.kernel));
    channels = spec.conv_filters[i];
    h = h >= spec.kernel ? h - spec.kernel + 1 : 0;
    w = w >= spec.kernel ? w - spec.kernel + 1 : 0;
    if (i < spec.pooled_convs) {
      layers.push_back(maxpool2d_layer(spec.pool));
      h /= spec.pool;
      w /= spec.pool;
    }
  }
  layers.push_back(flatten_layer());
  std::size_t features = channels * h * w;
  for (std::size_t units : spec.hidden_units) {
    layers.push_back(dense_layer(features, units));
    features = units;
  }
  layers.push_back(sigmoid_output_layer(features));
  return Network(input, std::move(layers));
}

void initialize_weights(Network& net, Rng& rng) {
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    LayerParams& p = net.layer(i);
    if (!p.has_parameters()) continue;
    double limit = 0.0;
    if (p.kind == LayerKind::Conv2D) {
      const double fan_in = static_cast<double>(p.weights.extent(1) * p.kernel * p.kernel);
      limit = std::sqrt(6.0 / fan_in);
    } else if (p.kind == LayerKind::Dense) {
      limit = std::sqrt(6.0 / static_cast<double>(p.weights.extent(1)));
    } else {
      limit = std::sqrt(6.0 / static_cast<double>(p.weights.extent(1) + p.units));
    }
    for (double& v : p.weights.values()) v = rng.uniform(-limit, limit);
    p.biases.fill(0.0);
  }
}

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const LayerParams& p : net.layers()) {
    g.weights.push_back(Tensor::zeros_like(p.weights));
    g.biases.push_back(Tensor::zeros_like(p.biases));
  }
  return g;
}

void Gradients::zero() {
  for (Tensor& t : weights) t.fill(0.0);
  for (Tensor& t : biases) t.fill(0.0);
}

// ---------------------------------------------------------------------------

std::vector<double> forward(const Network& net, const Tensor& batch, ForwardCache& cache) {
  check_batch(net, batch);
  const std::size_t n = batch.extent(0);
  const auto& layers = net.layers();
  const auto& shapes = net.activation_shapes();

  cache.activations.resize(layers.size() + 1);
  cache.argmax.resize(layers.size());
  cache.activations[0] = batch;

  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerParams& p = layers[l];
    const auto& in_shape = shapes[l];
    const Tensor& in = cache.activations[l];
    Tensor& out = cache.activations[l + 1];
    out.assign_zero(with_batch(n, shapes[l + 1]));
    const std::size_t in_stride = shape_size(in_shape);
    const std::size_t out_stride = shape_size(shapes[l + 1]);

    switch (p.kind) {
      case LayerKind::Conv2D: {
        cache.scratch.resize(
            std::max(cache.scratch.size(), kernels::conv2d_scratch_size(in_shape[0], in_shape[1], in_shape[2], p)));
        for (std::size_t s = 0; s < n; ++s)
          kernels::conv2d_forward(in.data() + s * in_stride, in_shape[0], in_shape[1], in_shape[2], p,
                                  out.data() + s * out_stride, cache.scratch.data());
        if (p.relu) apply_relu(out);
        break;
      }
      case LayerKind::MaxPool2D: {
        cache.argmax[l].resize(n * out_stride);
        for (std::size_t s = 0; s < n; ++s)
          kernels::maxpool_forward(in.data() + s * in_stride, in_shape[0], in_shape[1], in_shape[2], p.pool,
                                   out.data() + s * out_stride, cache.argmax[l].data() + s * out_stride);
        break;
      }
      case LayerKind::Flatten:
        std::copy(in.data(), in.data() + in.size(), out.data());
        break;
      case LayerKind::Dense:
        kernels::dense_forward(in.data(), n, p, out.data());
        if (p.relu) apply_relu(out);
        break;
      case LayerKind::SigmoidOutput:
        kernels::dense_forward(in.data(), n, p, out.data());
        for (double& v : out.values()) v = sigmoid(v);
        break;
    }
  }
  const Tensor& last = cache.activations.back();
  return {last.data(), last.data() + last.size()};
}

std::vector<double> forward(const Network& net, const Tensor& batch) {
  ForwardCache cache;
  return forward(net, batch, cache);
}

BatchResult forward_backward(const Network& net, const Tensor& batch, std::span<const double> labels,
                             ForwardCache& cache, Gradients& grads) {
  BatchResult result;
  result.probabilities = forward(net, batch, cache);
  const std::size_t n = batch.extent(0);
  if (labels.size() != n) throw ShapeMismatch("label count does not match batch size");
  if (grads.weights.size() != net.layers().size()) grads = Gradients::zeros_like(net);
  grads.zero();

  const auto& layers = net.layers();
  const auto& shapes = net.activation_shapes();

  // Sigmoid + cross-entropy: dL/dz = p - y, averaged over the batch.
  double loss = 0.0;
  cache.delta.assign_zero({n, 1});
  for (std::size_t s = 0; s < n; ++s) {
    loss += bce_loss(result.probabilities[s], labels[s]);
    cache.delta[s] = (result.probabilities[s] - labels[s]) / static_cast<double>(n);
  }
  result.loss = loss / static_cast<double>(n);

  for (std::size_t l = layers.size(); l-- > 0;) {
    const LayerParams& p = layers[l];
    const Tensor& in = cache.activations[l];
    const auto& in_shape = shapes[l];
    const std::size_t in_stride = shape_size(in_shape);
    const std::size_t out_stride = shape_size(shapes[l + 1]);
    const bool need_input_grad = l > 0;
    Tensor& delta = cache.delta;
    Tensor& next = cache.delta_next;

    switch (p.kind) {
      case LayerKind::SigmoidOutput:
      case LayerKind::Dense:
        if (p.relu) mask_relu(delta, cache.activations[l + 1]);
        if (need_input_grad) next.assign_zero(with_batch(n, in_shape));
        kernels::dense_backward(in.data(), n, delta.data(), p, grads.weights[l].data(), grads.biases[l].data(),
                                need_input_grad ? next.data() : nullptr);
        break;
      case LayerKind::Flatten:
        next = delta;
        next.reshape(with_batch(n, in_shape));
        break;
      case LayerKind::MaxPool2D:
        next.assign_zero(with_batch(n, in_shape));
        for (std::size_t s = 0; s < n; ++s)
          kernels::maxpool_backward(delta.data() + s * out_stride, out_stride,
                                    cache.argmax[l].data() + s * out_stride, next.data() + s * in_stride);
        break;
      case LayerKind::Conv2D:
        if (p.relu) mask_relu(delta, cache.activations[l + 1]);
        if (need_input_grad) next.assign_zero(with_batch(n, in_shape));
        cache.scratch.resize(
            std::max(cache.scratch.size(), kernels::conv2d_scratch_size(in_shape[0], in_shape[1], in_shape[2], p)));
        for (std::size_t s = 0; s < n; ++s)
          kernels::conv2d_backward(in.data() + s * in_stride, in_shape[0], in_shape[1], in_shape[2],
                                   delta.data() + s * out_stride, p, grads.weights[l].data(),
                                   grads.biases[l].data(), need_input_grad ? next.data() + s * in_stride : nullptr,
                                   cache.scratch.data());
        break;
    }
    if (need_input_grad) std::swap(cache.delta, cache.delta_next);
  }
  return result;
}

LossAndGradients backward(const Network& net, const Tensor& input, double label) {
  Tensor batch = input;
  batch.reshape(with_batch(1, input.shape()));
  ForwardCache cache;
  LossAndGradients out;
  out.gradients = Gradients::zeros_like(net);
  const double labels[1] = {label};
  out.loss = forward_backward(net, batch, labels, cache, out.gradients).loss;
  return out;
}

double sample_loss(const Network& net, const Tensor& input, double label) {
  Tensor batch = input;
  batch.reshape(with_batch(1, input.shape()));
  return bce_loss(forward(net, batch).front(), label);
}

}  // namespace rigscan
