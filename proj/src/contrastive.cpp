#include "radiocon/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace radiocon::contrastive {

using ad::Tape;
using ad::Tensor;

std::string_view to_string(SimilarityKernel kernel) {
  switch (kernel) {
    case SimilarityKernel::neg_distance: return "neg_distance";
    case SimilarityKernel::raw_distance: return "raw_distance";
    case SimilarityKernel::dot_product: return "dot_product";
  }
  return "unknown";
}

SimilarityKernel kernel_from_string(std::string_view name) {
  if (name == "neg_distance") return SimilarityKernel::neg_distance;
  if (name == "raw_distance") return SimilarityKernel::raw_distance;
  if (name == "dot_product") return SimilarityKernel::dot_product;
  throw ParameterError("unknown similarity kernel '" + std::string(name) + "'");
}

void ContrastiveConfig::validate() const {
  if (!(tau > 0)) throw ParameterError("tau must be > 0");
  if (!(p >= 1)) throw ParameterError("p must be >= 1");
  if (!(lambda >= 0 && lambda <= 1)) throw ParameterError("lambda must lie in [0, 1]");
}

Tensor score(Tape& tape, const Tensor& u, const Tensor& v, const ContrastiveConfig& config) {
  if (u.numel() != v.numel()) {
    throw DimensionError("score: embedding sizes differ " + ad::shape_string(u.shape()) + " vs " +
                         ad::shape_string(v.shape()));
  }
  switch (config.kernel) {
    case SimilarityKernel::neg_distance:
      return ad::scale(tape, ad::p_norm_distance(tape, u, v, static_cast<float>(config.p)), -1.0f);
    case SimilarityKernel::raw_distance:
      return ad::p_norm_distance(tape, u, v, static_cast<float>(config.p));
    case SimilarityKernel::dot_product:
      return ad::sum(tape, ad::mul(tape, u, v));
  }
  throw ParameterError("score: unknown kernel");
}

namespace {

void check_batch(const Tensor& u, const Tensor& v) {
  if (u.rank() != 2 || v.rank() != 2 || u.shape() != v.shape()) {
    throw DimensionError("contrastive batch needs equal N x d embeddings, got " +
                         ad::shape_string(u.shape()) + " and " + ad::shape_string(v.shape()));
  }
  for (const Tensor* t : {&u, &v}) {
    for (float x : t->values()) {
      if (!std::isfinite(x)) throw ContractError("contrastive loss: non-finite embedding value");
    }
  }
}

// Row i: -log softmax_k(s(anchor_i, other_k) / tau)[i].
Tensor directional_loss(Tape& tape, const Tensor& anchors, const Tensor& others,
                        const ContrastiveConfig& config) {
  config.validate();
  check_batch(anchors, others);
  const std::size_t n = anchors.dim(0);
  std::vector<Tensor> anchor_rows, other_rows;
  for (std::size_t i = 0; i < n; ++i) {
    anchor_rows.push_back(ad::row(tape, anchors, i));
    other_rows.push_back(ad::row(tape, others, i));
  }
  const auto inv_tau = static_cast<float>(1.0 / config.tau);
  std::vector<Tensor> losses;
  losses.reserve(n);
  std::vector<Tensor> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) scores[k] = score(tape, anchor_rows[i], other_rows[k], config);
    Tensor logits = ad::scale(tape, ad::stack(tape, scores), inv_tau);
    Tensor log_probs = ad::log_softmax(tape, logits);
    losses.push_back(ad::scale(tape, ad::pick(tape, log_probs, i), -1.0f));
  }
  return ad::stack(tape, losses);
}

}  // namespace

Tensor image_to_radiomics_loss(Tape& tape, const Tensor& u, const Tensor& v,
                               const ContrastiveConfig& config) {
  return directional_loss(tape, u, v, config);
}

Tensor radiomics_to_image_loss(Tape& tape, const Tensor& u, const Tensor& v,
                               const ContrastiveConfig& config) {
  return directional_loss(tape, v, u, config);
}

Tensor combined_loss(Tape& tape, const Tensor& u, const Tensor& v, const ContrastiveConfig& config) {
  Tensor forward = image_to_radiomics_loss(tape, u, v, config);
  Tensor backward = radiomics_to_image_loss(tape, u, v, config);
  const auto lambda = static_cast<float>(config.lambda);
  Tensor mixed = ad::add(tape, ad::scale(tape, forward, lambda),
                         ad::scale(tape, backward, 1.0f - lambda));
  return ad::mean(tape, mixed);
}

namespace {

double score_value(const double* u, const double* v, std::size_t d, const ContrastiveConfig& config) {
  if (config.kernel == SimilarityKernel::dot_product) {
    double dot = 0;
    for (std::size_t j = 0; j < d; ++j) dot += u[j] * v[j];
    return dot;
  }
  double acc = 0;
  for (std::size_t j = 0; j < d; ++j) acc += std::pow(std::abs(u[j] - v[j]), config.p);
  const double dist = std::pow(acc, 1.0 / config.p);
  return config.kernel == SimilarityKernel::neg_distance ? -dist : dist;
}

std::vector<double> directional_values(std::span<const double> anchors, std::span<const double> others,
                                       std::size_t n, std::size_t d, const ContrastiveConfig& config) {
  std::vector<double> out(n), logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      logits[k] = score_value(&anchors[i * d], &others[k * d], d, config) / config.tau;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0;
    for (double l : logits) sum += std::exp(l - top);
    out[i] = top + std::log(sum) - logits[i];
  }
  return out;
}

}  // namespace

LossValues evaluate_losses(std::span<const double> u, std::span<const double> v, std::size_t n,
                           const ContrastiveConfig& config) {
  config.validate();
  if (n == 0 || u.size() != v.size() || u.size() % n != 0) {
    throw DimensionError("evaluate_losses: expected two N x d blocks with N = " + std::to_string(n));
  }
  for (double x : u) {
    if (!std::isfinite(x)) throw ContractError("contrastive loss: non-finite embedding value");
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw ContractError("contrastive loss: non-finite embedding value");
  }
  const std::size_t d = u.size() / n;
  LossValues out;
  out.image_to_radiomics = directional_values(u, v, n, d, config);
  out.radiomics_to_image = directional_values(v, u, n, d, config);
  for (std::size_t i = 0; i < n; ++i) {
    out.combined += config.lambda * out.image_to_radiomics[i] +
                    (1.0 - config.lambda) * out.radiomics_to_image[i];
  }
  out.combined /= static_cast<double>(n);
  return out;
}

Tensor finetune_loss(Tape& tape, const Tensor& predicted, std::span<const float> labels) {
  if (predicted.numel() != labels.size()) {
    throw DimensionError("finetune_loss: " + std::to_string(predicted.numel()) +
                         " predictions for " + std::to_string(labels.size()) + " labels");
  }
  const ad::Shape shape{labels.size()};
  std::vector<float> pos(labels.begin(), labels.end());
  std::vector<float> neg(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) neg[i] = 1.0f - labels[i];

  Tensor flat = ad::reshape(tape, predicted, shape);
  Tensor y = ad::clamp(tape, flat, kProbabilityEpsilon, 1.0f - kProbabilityEpsilon);
  Tensor log_y = ad::log(tape, y);
  Tensor log_not_y = ad::log(tape, ad::sub(tape, Tensor::constant_scalar(1.0f), y));
  Tensor ll = ad::add(tape, ad::mul(tape, Tensor::constant(shape, std::move(pos)), log_y),
                      ad::mul(tape, Tensor::constant(shape, std::move(neg)), log_not_y));
  return ad::scale(tape, ad::mean(tape, ll), -1.0f);
}

}  // namespace radiocon::contrastive
