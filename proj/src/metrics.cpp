#include "radiocon/metrics.hpp"

#include <algorithm>

#include "radiocon/tensor.hpp"

namespace radiocon::metrics {

double roc_auc(std::span<const ScoredLabel> scores) {
  std::vector<ScoredLabel> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredLabel& a, const ScoredLabel& b) { return a.score < b.score; });
  double positives = 0, negatives = 0, credit = 0;
  // Walk groups of equal score in ascending order; every positive beats all
  // negatives seen in earlier groups and ties half of its own group's.
  for (std::size_t start = 0; start < sorted.size();) {
    std::size_t end = start;
    double group_pos = 0, group_neg = 0;
    while (end < sorted.size() && sorted[end].score == sorted[start].score) {
      (sorted[end].label == 1 ? group_pos : group_neg) += 1;
      ++end;
    }
    credit += group_pos * negatives + 0.5 * group_pos * group_neg;
    positives += group_pos;
    negatives += group_neg;
    start = end;
  }
  if (positives == 0 || negatives == 0) {
    throw ContractError("roc_auc needs both classes present");
  }
  return credit / (positives * negatives);
}

double accuracy(const Confusion& c) {
  return c.total() == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double f1_score(const Confusion& c) {
  const long denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

MetricsReport evaluate_predictions(std::span<const ScoredLabel> predictions, double threshold) {
  MetricsReport report;
  for (const auto& p : predictions) {
    const bool predicted = p.score > threshold;
    if (p.label == 1) {
      (predicted ? report.confusion.tp : report.confusion.fn) += 1;
    } else {
      (predicted ? report.confusion.fp : report.confusion.tn) += 1;
    }
  }
  report.accuracy = accuracy(report.confusion);
  report.f1 = f1_score(report.confusion);
  try {
    report.auc = roc_auc(predictions);
  } catch (const ContractError&) {
    report.warnings.push_back("test split contains a single class; AUC undefined");
  }
  return report;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["accuracy"] = report.accuracy;
  j["f1"] = report.f1;
  j["auc"] = report.auc ? nlohmann::json(*report.auc) : nlohmann::json(nullptr);
  j["confusion"] = {{"tp", report.confusion.tp},
                    {"fp", report.confusion.fp},
                    {"tn", report.confusion.tn},
                    {"fn", report.confusion.fn}};
  j["pretrain_loss"] = report.pretrain_loss;
  j["finetune_loss"] = report.finetune_loss;
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace radiocon::metrics
