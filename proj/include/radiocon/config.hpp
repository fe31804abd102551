#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "radiocon/contrastive.hpp"
#include "radiocon/model.hpp"
#include "radiocon/optim.hpp"

namespace radiocon {

/// Every hyperparameter of a training run. Text form is flat `key=value`
/// lines using these field names; `#` starts a comment.
struct TrainConfig {
  double tau = 0.1;
  double p = 2.0;
  double lambda = 0.5;
  double lr = 0.1;
  optim::OptimizerKind optimizer = optim::OptimizerKind::sgd;
  double momentum = 0.0;
  std::size_t batch_size = 64;
  int max_epochs = 200;
  int patience = 10;
  double min_improvement = 1e-5;
  std::uint64_t seed = 0;
  int resolution = 64;
  int bins = 32;
  contrastive::SimilarityKernel similarity_kernel = contrastive::SimilarityKernel::neg_distance;

  int stem_channels = 16;
  std::vector<int> stage_channels{16, 32};
  int attention_modules = 1;
  int hidden_dim = 256;
  /// Worker threads for per-sample work; 0 = hardware concurrency. Results
  /// do not depend on it.
  int threads = 0;

  void validate() const;
  contrastive::ContrastiveConfig contrastive() const;
  model::BackboneConfig backbone() const;
  optim::OptimizerConfig optimizer_config() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Sets one field from its text form; throws ParameterError on unknown keys
/// or unparsable values.
void apply_setting(TrainConfig& config, std::string_view key, std::string_view value);
TrainConfig parse_config_text(std::string_view text, TrainConfig base = {});
TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base = {});

nlohmann::json to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j);

}  // namespace radiocon
