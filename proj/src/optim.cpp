#include "radiocon/optim.hpp"

#include <cmath>

namespace radiocon::optim {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ParameterError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.lr > 0)) throw ParameterError("lr must be > 0");
  if (config_.momentum < 0 || config_.momentum >= 1) throw ParameterError("momentum must be in [0, 1)");
  if (config_.beta1 < 0 || config_.beta1 >= 1 || config_.beta2 < 0 || config_.beta2 >= 1) {
    throw ParameterError("adam betas must be in [0, 1)");
  }
}

void Optimizer::step(std::span<const ad::NamedTensor> params) {
  if (config_.kind == OptimizerKind::sgd && config_.momentum == 0.0) {
    ad::sgd_step(params, static_cast<float>(config_.lr));
    ++steps_;
    return;
  }
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) throw ContractError("optimizer: parameter '" + p.name + "' has no gradient");
  }
  ++steps_;
  const double lr = config_.lr;
  for (const auto& p : params) {
    ad::Tensor t = p.tensor;
    auto values = t.mutable_values();
    auto grad = t.grad();
    auto& m = first_[p.name];
    if (m.empty()) m.assign(values.size(), 0.0f);
    if (config_.kind == OptimizerKind::sgd) {
      // Heavy-ball form: buf = momentum * buf + g; w -= lr * buf.
      const auto mu = static_cast<float>(config_.momentum);
      for (std::size_t i = 0; i < values.size(); ++i) {
        m[i] = mu * m[i] + grad[i];
        values[i] -= static_cast<float>(lr) * m[i];
      }
    } else {
      auto& v = second_[p.name];
      if (v.empty()) v.assign(values.size(), 0.0f);
      const double b1 = config_.beta1, b2 = config_.beta2;
      const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double g = grad[i];
        m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * g);
        v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * g * g);
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        values[i] -= static_cast<float>(lr * m_hat / (std::sqrt(v_hat) + config_.epsilon));
      }
    }
    t.zero_grad();
  }
}

}  // namespace radiocon::optim
