#include "radiocon/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "radiocon/contrastive.hpp"
#include "radiocon/model.hpp"
#include "radiocon/optim.hpp"

namespace radiocon::pipeline {

using ad::Tape;
using ad::Tensor;

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

bool EarlyStopping::update(double loss) {
  if (loss < best_ - min_improvement_) {
    best_ = loss;
    stale_ = 0;
    return false;
  }
  best_ = std::min(best_, loss);
  return ++stale_ >= patience_;
}

const radiomics::RadiomicsVector& RadiomicsCache::get(const data::Sample& sample, int bins) {
  const std::string key = sample.id + "|" + std::to_string(bins) + "|" + std::string(radiomics::kSchemaId);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(key, radiomics::extract_radiomics(sample.image, sample.bbox, {bins})).first->second;
}

void RadiomicsCache::prefetch(const std::vector<const data::Sample*>& samples, int bins, int threads) {
  std::vector<const data::Sample*> missing;
  for (const auto* s : samples) {
    const std::string key = s->id + "|" + std::to_string(bins) + "|" + std::string(radiomics::kSchemaId);
    if (!cache_.contains(key)) missing.push_back(s);
  }
  std::vector<radiomics::RadiomicsVector> computed(missing.size());
  parallel_for(missing.size(), threads, [&](std::size_t i) {
    computed[i] = radiomics::extract_radiomics(missing[i]->image, missing[i]->bbox, {bins});
  });
  for (std::size_t i = 0; i < missing.size(); ++i) {
    const std::string key = missing[i]->id + "|" + std::to_string(bins) + "|" + std::string(radiomics::kSchemaId);
    cache_.emplace(key, std::move(computed[i]));
  }
}

checkpoint::FeatureStats compute_feature_stats(const std::vector<radiomics::RadiomicsVector>& vectors) {
  checkpoint::FeatureStats stats;
  stats.mean.assign(radiomics::kFeatureCount, 0.0);
  stats.stddev.assign(radiomics::kFeatureCount, 1.0);
  if (vectors.empty()) return stats;
  const double n = static_cast<double>(vectors.size());
  for (std::size_t f = 0; f < radiomics::kFeatureCount; ++f) {
    double sum = 0;
    for (const auto& v : vectors) sum += v.values[f];
    const double mean = sum / n;
    double sq = 0;
    for (const auto& v : vectors) sq += (v.values[f] - mean) * (v.values[f] - mean);
    const double sd = std::sqrt(sq / n);
    stats.mean[f] = mean;
    stats.stddev[f] = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  }
  return stats;
}

std::vector<float> standardize(const radiomics::RadiomicsVector& vector,
                               const checkpoint::FeatureStats& stats) {
  if (stats.mean.size() != radiomics::kFeatureCount || stats.stddev.size() != radiomics::kFeatureCount) {
    throw ContractError("standardize: feature statistics must have 102 entries");
  }
  std::vector<float> out(radiomics::kFeatureCount);
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = static_cast<float>((vector.values[f] - stats.mean[f]) / stats.stddev[f]);
  }
  return out;
}

namespace {

std::vector<const data::Sample*> lookup(const std::vector<data::Sample>& samples,
                                        const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const data::Sample*> by_id;
  for (const auto& s : samples) by_id.emplace(s.id, &s);
  std::vector<const data::Sample*> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("sample '" + id + "' is not in the dataset");
    out.push_back(it->second);
  }
  return out;
}

model::ParamMap subset(const model::ParamMap& params, const std::vector<std::string_view>& prefixes) {
  model::ParamMap out;
  for (auto& named : model::select(params, prefixes)) out.emplace(named.name, named.tensor);
  return out;
}

// Adds each worker copy's gradient into the shared parameters, in sample
// order, so the sum does not depend on thread scheduling.
void reduce_gradients(const model::ParamMap& target, const std::vector<model::ParamMap>& copies) {
  for (const auto& [name, tensor] : target) {
    Tensor t = tensor;
    auto grad = t.mutable_grad();
    for (const auto& copy : copies) {
      const Tensor& c = copy.at(name);
      if (!c.has_grad()) continue;
      auto g = c.grad();
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += g[i];
    }
  }
}

struct EncodedImage {
  std::unique_ptr<Tape> tape;
  model::ParamMap params;
  Tensor embedding;
};

bool all_finite(std::span<const float> values) {
  return std::all_of(values.begin(), values.end(), [](float x) { return std::isfinite(x); });
}

std::string format_loss(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void check_finite(double loss, const std::vector<std::string>& ids, const char* phase) {
  if (std::isfinite(loss)) return;
  std::string joined;
  for (const auto& id : ids) joined += (joined.empty() ? "" : ",") + id;
  throw NumericError(std::string(phase) + " loss is not finite on batch [" + joined + "]", ids);
}

}  // namespace

TrainResult pretrain(const std::vector<data::Sample>& samples, const data::DatasetSplit& split,
                     const TrainConfig& config, RadiomicsCache& cache, const Logger& log) {
  config.validate();
  if (config.batch_size < 2) throw ParameterError("contrastive pretraining needs batch_size >= 2");
  const auto train = lookup(samples, split.train_ids);
  if (train.size() < config.batch_size) {
    throw DataError("training split has " + std::to_string(train.size()) +
                    " samples, fewer than batch_size " + std::to_string(config.batch_size));
  }
  const auto backbone = config.backbone();
  const auto loss_config = config.contrastive();

  cache.prefetch(train, config.bins, config.threads);
  std::vector<radiomics::RadiomicsVector> vectors;
  for (const auto* s : train) vectors.push_back(cache.get(*s, config.bins));
  const auto stats = compute_feature_stats(vectors);

  std::unordered_map<std::string, std::vector<float>> features;
  std::unordered_map<std::string, Tensor> inputs;
  for (std::size_t i = 0; i < train.size(); ++i) {
    features.emplace(train[i]->id, standardize(vectors[i], stats));
    inputs.emplace(train[i]->id, model::image_input(train[i]->image, backbone));
  }

  model::ParamMap params = model::init_params(backbone, config.seed);
  const model::ParamMap image_params = subset(params, model::kImageTower);
  const auto trainable = model::select(params, {"stem.", "stage", "image_head.", model::kRadiomicsTower});

  TrainResult result;
  EarlyStopping stopper(config.patience, config.min_improvement);
  optim::Optimizer optimizer(config.optimizer_config());
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches = data::make_batches(split.train_ids, config.batch_size,
                                            derive_seed(config.seed, "pretrain/epoch" + std::to_string(epoch)),
                                            data::BatchMode::contrastive);
    double epoch_loss = 0;
    for (const auto& batch : batches) {
      const std::size_t n = batch.size();
      std::vector<EncodedImage> encoded(n);
      parallel_for(n, config.threads, [&](std::size_t i) {
        encoded[i].tape = std::make_unique<Tape>();
        encoded[i].params = model::clone(image_params);
        encoded[i].embedding = model::encode_image(*encoded[i].tape, inputs.at(batch[i]),
                                                   encoded[i].params, backbone);
      });

      const auto d = static_cast<std::size_t>(backbone.embedding_dim);
      std::vector<float> u_values, r_values;
      u_values.reserve(n * d);
      r_values.reserve(n * model::kRadiomicsDim);
      for (std::size_t i = 0; i < n; ++i) {
        auto e = encoded[i].embedding.values();
        u_values.insert(u_values.end(), e.begin(), e.end());
        const auto& f = features.at(batch[i]);
        r_values.insert(r_values.end(), f.begin(), f.end());
      }
      Tape loss_tape;
      Tensor u = Tensor::parameter({n, d}, std::move(u_values));
      Tensor r = Tensor::constant({n, static_cast<std::size_t>(model::kRadiomicsDim)}, std::move(r_values));
      Tensor v = model::encode_radiomics(loss_tape, r, params, backbone);
      if (!all_finite(u.values()) || !all_finite(v.values())) {
        check_finite(std::numeric_limits<double>::quiet_NaN(), batch, "contrastive embedding");
      }
      Tensor loss = contrastive::combined_loss(loss_tape, u, v, loss_config);
      check_finite(loss.item(), batch, "contrastive");
      loss_tape.backward(loss);

      parallel_for(n, config.threads, [&](std::size_t i) {
        encoded[i].tape->backward(encoded[i].embedding, u.grad().subspan(i * d, d));
      });
      std::vector<model::ParamMap> copies;
      copies.reserve(n);
      for (auto& e : encoded) copies.push_back(std::move(e.params));
      encoded.clear();
      reduce_gradients(image_params, copies);
      // Reported in 64-bit from the embeddings used for this step.
      const std::vector<double> u64(u.values().begin(), u.values().end());
      const std::vector<double> v64(v.values().begin(), v.values().end());
      epoch_loss += contrastive::evaluate_losses(u64, v64, n, loss_config).combined;
      optimizer.step(trainable);
    }
    epoch_loss /= static_cast<double>(batches.size());
    check_finite(epoch_loss, {}, "contrastive epoch");
    result.loss_curve.push_back(epoch_loss);
    if (log) log("pretrain epoch " + std::to_string(epoch) + " loss " + format_loss(epoch_loss));
    if (stopper.update(epoch_loss)) {
      if (log) log("early stop after " + std::to_string(epoch) + " epochs");
      break;
    }
  }

  result.checkpoint.config = config;
  result.checkpoint.feature_stats = stats;
  result.checkpoint.params = std::move(params);
  result.checkpoint.phase = checkpoint::Phase::pretrained;
  return result;
}

TrainResult finetune(const std::vector<data::Sample>& samples, const data::DatasetSplit& split,
                     const std::optional<checkpoint::Checkpoint>& initial, const TrainConfig& config,
                     const Logger& log) {
  config.validate();
  const auto backbone = initial ? initial->config.backbone() : config.backbone();
  const auto train = lookup(samples, split.train_ids);
  if (train.empty()) throw DataError("training split is empty");

  model::ParamMap params = initial ? model::clone(initial->params) : model::init_params(backbone, config.seed);
  if (!params.contains("classifier.weight")) model::attach_classifier(params, backbone);
  const model::ParamMap tuned =
      subset(params, {"stem.", "stage", "image_head.", model::kClassifier});
  const auto trainable = model::select(tuned, {""});

  std::unordered_map<std::string, Tensor> inputs;
  std::unordered_map<std::string, float> labels;
  for (const auto* s : train) {
    inputs.emplace(s->id, model::image_input(s->image, backbone));
    labels.emplace(s->id, s->label == data::Label::pneumonia ? 1.0f : 0.0f);
  }

  TrainResult result;
  EarlyStopping stopper(config.patience, config.min_improvement);
  optim::Optimizer optimizer(config.optimizer_config());
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches = data::make_batches(split.train_ids, config.batch_size,
                                            derive_seed(config.seed, "finetune/epoch" + std::to_string(epoch)),
                                            data::BatchMode::supervised);
    double epoch_total = 0;
    for (const auto& batch : batches) {
      const std::size_t n = batch.size();
      std::vector<model::ParamMap> copies(n);
      std::vector<double> losses(n);
      parallel_for(n, config.threads, [&](std::size_t i) {
        Tape tape;
        copies[i] = model::clone(tuned);
        Tensor u = model::encode_image(tape, inputs.at(batch[i]), copies[i], backbone);
        Tensor prob = model::classify(tape, u, copies[i]);
        const float label = labels.at(batch[i]);
        Tensor loss = contrastive::finetune_loss(tape, prob, std::span<const float>(&label, 1));
        losses[i] = loss.item();
        tape.backward(ad::scale(tape, loss, 1.0f / static_cast<float>(n)));
      });
      double batch_total = 0;
      for (double l : losses) batch_total += l;
      check_finite(batch_total, batch, "fine-tune");
      reduce_gradients(tuned, copies);
      optimizer.step(trainable);
      epoch_total += batch_total;
    }
    const double epoch_loss = epoch_total / static_cast<double>(train.size());
    result.loss_curve.push_back(epoch_loss);
    if (log) log("finetune epoch " + std::to_string(epoch) + " loss " + format_loss(epoch_loss));
    if (stopper.update(epoch_loss)) {
      if (log) log("early stop after " + std::to_string(epoch) + " epochs");
      break;
    }
  }

  // The architecture and radiomics settings belong to the pretrained model.
  result.checkpoint.config = config;
  if (initial) {
    auto& c = result.checkpoint.config;
    c.resolution = initial->config.resolution;
    c.stem_channels = initial->config.stem_channels;
    c.stage_channels = initial->config.stage_channels;
    c.attention_modules = initial->config.attention_modules;
    c.hidden_dim = initial->config.hidden_dim;
    c.bins = initial->config.bins;
  }
  result.checkpoint.feature_stats = initial ? initial->feature_stats : compute_feature_stats({});
  result.checkpoint.params = std::move(params);
  result.checkpoint.phase = checkpoint::Phase::finetuned;
  return result;
}

double predict(const data::Sample& sample, const checkpoint::Checkpoint& ckpt) {
  if (!ckpt.params.contains("classifier.weight")) {
    throw ContractError("checkpoint has no classifier head; fine-tune it first");
  }
  const auto backbone = ckpt.config.backbone();
  Tape tape;
  Tensor u = model::encode_image(tape, model::image_input(sample.image, backbone), ckpt.params, backbone);
  return model::classify(tape, u, ckpt.params).item();
}

metrics::MetricsReport evaluate(const std::vector<data::Sample>& samples, const data::DatasetSplit& split,
                                const checkpoint::Checkpoint& ckpt, int threads) {
  const auto test = lookup(samples, split.test_ids);
  std::vector<metrics::ScoredLabel> scored(test.size());
  parallel_for(test.size(), threads, [&](std::size_t i) {
    scored[i] = {predict(*test[i], ckpt), test[i]->label == data::Label::pneumonia ? 1 : 0};
  });
  return metrics::evaluate_predictions(scored, 0.5);
}

std::string feature_csv(const std::vector<data::Sample>& samples, int bins,
                        std::vector<std::string>* errors) {
  std::string out = "id";
  for (const auto& name : radiomics::feature_names()) out += "," + name;
  out += "\n";
  std::vector<std::optional<radiomics::RadiomicsVector>> vectors(samples.size());
  std::vector<std::string> failures(samples.size());
  parallel_for(samples.size(), 0, [&](std::size_t i) {
    try {
      vectors[i] = radiomics::extract_radiomics(samples[i].image, samples[i].bbox, {bins});
    } catch (const std::exception& e) {
      failures[i] = samples[i].id + ": " + e.what();
    }
  });
  char buf[40];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!vectors[i]) {
      if (errors) errors->push_back(failures[i]);
      continue;
    }
    out += samples[i].id;
    for (double v : vectors[i]->values) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

std::string loss_curve_csv(const std::vector<double>& curve) {
  std::string out = "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < curve.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, curve[i]);
    out += buf;
  }
  return out;
}

}  // namespace radiocon::pipeline
