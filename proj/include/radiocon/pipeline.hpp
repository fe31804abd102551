#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "radiocon/checkpoint.hpp"
#include "radiocon/config.hpp"
#include "radiocon/data.hpp"
#include "radiocon/metrics.hpp"
#include "radiocon/radiomics.hpp"

// The three phases: contrastive pretraining, supervised fine-tuning and
// image-only evaluation.
namespace radiocon::pipeline {

/// A loss became NaN/Inf; carries the ids of the offending batch.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::vector<std::string> batch_ids)
      : std::runtime_error(what), batch_ids_(std::move(batch_ids)) {}
  const std::vector<std::string>& batch_ids() const { return batch_ids_; }

 private:
  std::vector<std::string> batch_ids_;
};

using Logger = std::function<void(const std::string&)>;

/// Stops after `patience` consecutive epochs that fail to beat the best loss
/// by more than `min_improvement`.
class EarlyStopping {
 public:
  EarlyStopping(int patience, double min_improvement)
      : patience_(patience), min_improvement_(min_improvement) {}
  /// Records an epoch loss; returns true when training should stop.
  bool update(double loss);
  int stale_epochs() const { return stale_; }

 private:
  int patience_;
  double min_improvement_;
  double best_ = std::numeric_limits<double>::infinity();
  int stale_ = 0;
};

/// Radiomics vectors memoised by (sample id, bins, schema).
class RadiomicsCache {
 public:
  const radiomics::RadiomicsVector& get(const data::Sample& sample, int bins);
  /// Fills the cache for all samples, fanning out over `threads` workers.
  void prefetch(const std::vector<const data::Sample*>& samples, int bins, int threads);
  std::size_t size() const { return cache_.size(); }

 private:
  std::map<std::string, radiomics::RadiomicsVector> cache_;
};

/// Per-feature z-score statistics; a zero spread is replaced by 1.
checkpoint::FeatureStats compute_feature_stats(const std::vector<radiomics::RadiomicsVector>& vectors);
std::vector<float> standardize(const radiomics::RadiomicsVector& vector,
                               const checkpoint::FeatureStats& stats);

struct TrainResult {
  checkpoint::Checkpoint checkpoint;
  std::vector<double> loss_curve;  // epoch means
};

/// Contrastive phase over `split.train_ids`.
TrainResult pretrain(const std::vector<data::Sample>& samples, const data::DatasetSplit& split,
                     const TrainConfig& config, RadiomicsCache& cache, const Logger& log = {});

/// Supervised phase; starts from `initial` (a pretrained checkpoint) or, when
/// empty, from freshly initialized weights. Updates the image tower and the
/// classifier head.
TrainResult finetune(const std::vector<data::Sample>& samples, const data::DatasetSplit& split,
                     const std::optional<checkpoint::Checkpoint>& initial,
                     const TrainConfig& config, const Logger& log = {});

/// Probability of pneumonia from the image alone.
double predict(const data::Sample& sample, const checkpoint::Checkpoint& ckpt);

/// Metrics over `split.test_ids`, reading only images and labels.
metrics::MetricsReport evaluate(const std::vector<data::Sample>& samples,
                                const data::DatasetSplit& split,
                                const checkpoint::Checkpoint& ckpt, int threads = 0);

/// Header plus one row per sample, 17 significant digits.
std::string feature_csv(const std::vector<data::Sample>& samples, int bins,
                        std::vector<std::string>* errors = nullptr);

std::string loss_curve_csv(const std::vector<double>& curve);

/// Runs fn(i) for i in [0, n) across worker threads; rethrows the first
/// exception. Callers must make fn(i) independent of scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace radiocon::pipeline
