#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here is written as plain nested loops over the public
// tensor accessors, sharing no code with the library kernels.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "rigscan/layers.hpp"
#include "rigscan/network.hpp"
#include "rigscan/rng.hpp"
#include "rigscan/synthgen.hpp"
#include "rigscan/tensor.hpp"

namespace oracle {

using rigscan::LayerParams;
using rigscan::Rng;
using rigscan::Tensor;

inline void fill_uniform(Tensor& t, Rng& rng, double lo, double hi) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
}

inline Tensor conv2d(const Tensor& in, const LayerParams& p) {
  const std::size_t C = in.extent(0), H = in.extent(1), W = in.extent(2), K = p.kernel;
  const std::size_t Ho = H - K + 1, Wo = W - K + 1;
  Tensor out({p.filters, Ho, Wo});
  for (std::size_t f = 0; f < p.filters; ++f)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) {
        long double s = p.biases[f];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t a = 0; a < K; ++a)
            for (std::size_t b = 0; b < K; ++b)
              s += static_cast<long double>(p.weights.at({f, c, a, b})) * in.at({c, i + a, j + b});
        out.at({f, i, j}) = static_cast<double>(s);
      }
  return out;
}

inline Tensor dense(const Tensor& in, const LayerParams& p) {
  const std::size_t n = p.weights.extent(1);
  Tensor out({p.units});
  for (std::size_t o = 0; o < p.units; ++o) {
    long double s = p.biases[o];
    for (std::size_t k = 0; k < n; ++k) s += static_cast<long double>(p.weights.at({o, k})) * in[k];
    out[o] = static_cast<double>(s);
  }
  return out;
}

inline Tensor maxpool(const Tensor& in, std::size_t pool) {
  const std::size_t C = in.extent(0), Ho = in.extent(1) / pool, Wo = in.extent(2) / pool;
  Tensor out({C, Ho, Wo});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) {
        double m = -INFINITY;
        for (std::size_t a = 0; a < pool; ++a)
          for (std::size_t b = 0; b < pool; ++b) m = std::max(m, in.at({c, i * pool + a, j * pool + b}));
        out.at({c, i, j}) = m;
      }
  return out;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// Valid convolutions shrink by k-1, pooling floors.
inline std::size_t flatten_width(std::size_t side, const rigscan::ArchitectureSpec& spec) {
  for (std::size_t i = 0; i < spec.conv_filters.size(); ++i) {
    side = side - spec.kernel + 1;
    if (i < spec.pooled_convs) side /= spec.pool;
  }
  return side * side * spec.conv_filters.back();
}

// Same layer kinds as the classifier, sized for an 8x8 input.
inline rigscan::ArchitectureSpec reduced_architecture() {
  rigscan::ArchitectureSpec spec;
  spec.conv_filters = {3, 4};
  spec.pooled_convs = 1;
  spec.hidden_units = {6, 5};
  return spec;
}

struct GradientReport {
  std::size_t checked = 0;
  double worst_relative = 0.0;
};

// Mean BCE of the batched forward pass.
inline double batch_loss(const rigscan::Network& net, const Tensor& batch, const std::vector<double>& labels) {
  const auto probs = rigscan::forward(net, batch);
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) s += rigscan::bce_loss(probs[i], labels[i]);
  return s / static_cast<double>(probs.size());
}

// Central differences for every parameter against the analytic gradient.
// Relative error |a - n| / max(|a|, |n|, floor).
inline GradientReport check_gradients(rigscan::Network net, const Tensor& batch, const std::vector<double>& labels,
                                      double h, double floor) {
  rigscan::ForwardCache cache;
  auto grads = rigscan::Gradients::zeros_like(net);
  rigscan::forward_backward(net, batch, labels, cache, grads);

  GradientReport report;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    if (!net.layers()[l].has_parameters()) continue;
    for (int which = 0; which < 2; ++which) {
      const Tensor& g = which == 0 ? grads.weights[l] : grads.biases[l];
      for (std::size_t i = 0; i < g.size(); ++i) {
        Tensor& param = which == 0 ? net.layer(l).weights : net.layer(l).biases;
        const double saved = param[i];
        param[i] = saved + h;
        const double up = batch_loss(net, batch, labels);
        param[i] = saved - h;
        const double down = batch_loss(net, batch, labels);
        param[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(numeric), std::abs(g[i]), floor});
        report.worst_relative = std::max(report.worst_relative, std::abs(numeric - g[i]) / denom);
        ++report.checked;
      }
    }
  }
  return report;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("rigscan_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Labeled images from the default generator, drawn at the given side length.
inline std::vector<rigscan::LabeledImage> corpus_images(std::size_t collusive, std::size_t competitive,
                                                        std::uint64_t seed, std::size_t size = 64) {
  auto preset = rigscan::default_corpus(collusive, competitive, seed);
  rigscan::CorpusOptions opts;
  opts.raster.size = size;
  std::vector<rigscan::LabeledImage> images;
  for (auto& item : rigscan::generate_corpus(preset.requests, opts)) images.push_back(std::move(item.image));
  return images;
}

}  // namespace oracle
