#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "radiocon/ops.hpp"

// First-order optimizers over named parameters. State is keyed by parameter
// name, so the same optimizer must always see the same parameter set.
namespace radiocon::optim {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double lr = 0.1;
  double momentum = 0.0;  // sgd only
  double beta1 = 0.9;     // adam only
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  /// Applies one update from the accumulated gradients, then zeroes them.
  /// Throws ContractError naming any parameter without a gradient.
  void step(std::span<const ad::NamedTensor> params);

  long steps() const { return steps_; }

 private:
  OptimizerConfig config_;
  long steps_ = 0;
  std::map<std::string, std::vector<float>> first_;
  std::map<std::string, std::vector<float>> second_;
};

}  // namespace radiocon::optim
