#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "radiocon/ops.hpp"
#include "radiocon/tensor.hpp"

// Image <-> radiomics contrastive objectives and the fine-tuning
// cross-entropy.
namespace radiocon::contrastive {

enum class SimilarityKernel {
  neg_distance,  // -d_p(u, v): true pairs are pulled together
  raw_distance,  // +d_p(u, v): the literal distance-in-the-numerator reading
  dot_product,   // u . v
};

std::string_view to_string(SimilarityKernel kernel);
/// Throws ParameterError on unknown names.
SimilarityKernel kernel_from_string(std::string_view name);

struct ContrastiveConfig {
  double tau = 0.1;
  double p = 2.0;
  double lambda = 0.5;
  SimilarityKernel kernel = SimilarityKernel::neg_distance;

  void validate() const;
};

inline constexpr float kProbabilityEpsilon = 1e-7f;

ad::Tensor score(ad::Tape& tape, const ad::Tensor& u, const ad::Tensor& v,
                 const ContrastiveConfig& config);

/// Per-sample -log softmax_k(s(u_i, v_k) / tau)[i] for U, V of shape N x d.
ad::Tensor image_to_radiomics_loss(ad::Tape& tape, const ad::Tensor& u, const ad::Tensor& v,
                                   const ContrastiveConfig& config);

/// Per-sample -log softmax_k(s(v_i, u_k) / tau)[i].
ad::Tensor radiomics_to_image_loss(ad::Tape& tape, const ad::Tensor& u, const ad::Tensor& v,
                                   const ContrastiveConfig& config);

/// mean_i [lambda * L_i(u->v) + (1 - lambda) * L_i(v->u)]
ad::Tensor combined_loss(ad::Tape& tape, const ad::Tensor& u, const ad::Tensor& v,
                         const ContrastiveConfig& config);

/// The same three losses evaluated in 64-bit without a tape. U and V are
/// row-major N x d. Used for reported loss values.
struct LossValues {
  std::vector<double> image_to_radiomics;
  std::vector<double> radiomics_to_image;
  double combined = 0;
};
LossValues evaluate_losses(std::span<const double> u, std::span<const double> v, std::size_t n,
                           const ContrastiveConfig& config);

/// Mean binary cross-entropy; predictions are clamped to [eps, 1 - eps].
ad::Tensor finetune_loss(ad::Tape& tape, const ad::Tensor& predicted,
                         std::span<const float> labels);

}  // namespace radiocon::contrastive
