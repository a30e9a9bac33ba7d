#include "rigscan/optimizer.hpp"

#include <cmath>

#include "rigscan/error.hpp"

namespace rigscan {

std::string_view optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("moment decay rates must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

namespace {

void update(Tensor& param, const Tensor& grad, Tensor* m, Tensor* v, const OptimizerConfig& cfg,
            double correction1, double correction2) {
  if (param.size() != grad.size()) throw ShapeMismatch("gradient shape does not match parameter");
  double* w = param.data();
  const double* g = grad.data();
  if (cfg.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < param.size(); ++i) w[i] -= cfg.learning_rate * g[i];
    return;
  }
  double* mm = m->data();
  double* vv = v->data();
  for (std::size_t i = 0; i < param.size(); ++i) {
    mm[i] = cfg.beta1 * mm[i] + (1.0 - cfg.beta1) * g[i];
    vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = mm[i] / correction1;
    const double v_hat = vv[i] / correction2;
    w[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace

void sgd_step(Network& net, const Gradients& grads, OptimizerState& state, const OptimizerConfig& config) {
  const std::size_t n = net.layers().size();
  if (grads.weights.size() != n || grads.biases.size() != n)
    throw ShapeMismatch("gradients do not match the network's layer count");
  if (config.kind == OptimizerKind::Adam && state.first_moment.weights.size() != n) {
    state.first_moment = Gradients::zeros_like(net);
    state.second_moment = Gradients::zeros_like(net);
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);

  const bool adam = config.kind == OptimizerKind::Adam;
  for (std::size_t l = 0; l < n; ++l) {
    LayerParams& p = net.layer(l);
    if (!p.has_parameters()) continue;
    update(p.weights, grads.weights[l], adam ? &state.first_moment.weights[l] : nullptr,
           adam ? &state.second_moment.weights[l] : nullptr, config, c1, c2);
    update(p.biases, grads.biases[l], adam ? &state.first_moment.biases[l] : nullptr,
           adam ? &state.second_moment.biases[l] : nullptr, config, c1, c2);
  }
}

}  // namespace rigscan
