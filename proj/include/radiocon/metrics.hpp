#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace radiocon::metrics {

struct ScoredLabel {
  double score;
  int label;  // 0 or 1
};

/// (concordant + 0.5 * tied) / (positives * negatives), via one sort.
/// Throws ContractError unless both classes are present.
double roc_auc(std::span<const ScoredLabel> scores);

struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
  long total() const { return tp + fp + tn + fn; }
};

double accuracy(const Confusion& c);
/// 2TP / (2TP + FP + FN); 0 when there are no positives at all.
double f1_score(const Confusion& c);

struct MetricsReport {
  double accuracy = 0;
  double f1 = 0;
  std::optional<double> auc;  // absent when the test split has one class
  Confusion confusion;
  std::vector<double> pretrain_loss;
  std::vector<double> finetune_loss;
  std::vector<std::string> warnings;
};

/// label = 1 iff probability > threshold.
MetricsReport evaluate_predictions(std::span<const ScoredLabel> predictions,
                                   double threshold = 0.5);

nlohmann::json to_json(const MetricsReport& report);

}  // namespace radiocon::metrics
