#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "rigscan/network.hpp"

namespace rigscan {

enum class OptimizerKind { Sgd, Adam };

std::string_view optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);  // "sgd" | "adam", throws ConfigError

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// Moment estimates for Adam; untouched by plain SGD.
struct OptimizerState {
  std::uint64_t step = 0;
  Gradients first_moment;
  Gradients second_moment;
};

// Plain SGD: w <- w - lr * g.
// Adam: bias-corrected moments, w <- w - lr * m_hat / (sqrt(v_hat) + eps).
void sgd_step(Network& net, const Gradients& grads, OptimizerState& state, const OptimizerConfig& config);

}  // namespace rigscan
