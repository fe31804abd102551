#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "radiocon/image.hpp"
#include "radiocon/ops.hpp"
#include "radiocon/tensor.hpp"

// Image tower (residual attention CNN + MLP head), radiomics tower (MLP) and
// the binary classifier head used after contrastive pretraining.
namespace radiocon::model {

inline constexpr int kRadiomicsDim = 102;
inline constexpr int kEmbeddingDim = 128;

struct BackboneConfig {
  int input_resolution = 64;
  int stem_channels = 16;
  std::vector<int> stage_channels{16, 32};
  int attention_modules = 1;
  int embedding_dim = kEmbeddingDim;
  int hidden_dim = 256;

  /// Throws ParameterError when the configuration cannot be built.
  void validate() const;
  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

/// Parameter path -> tensor, e.g. "stage1.attn1.mask.conv1.weight".
/// Ordered so iteration (and therefore serialization) is deterministic.
using ParamMap = std::map<std::string, ad::Tensor>;

/// He-initialized image and radiomics towers. The classifier head is not
/// included; see `attach_classifier`.
ParamMap init_params(const BackboneConfig& config, std::uint64_t seed);

/// Adds a zero-initialized linear head ("classifier.weight", "classifier.bias").
void attach_classifier(ParamMap& params, const BackboneConfig& config);

/// Number of scalars in `init_params(config, seed)`.
std::size_t parameter_count(const BackboneConfig& config);

/// Entries whose name starts with any of the prefixes, in map order.
std::vector<ad::NamedTensor> select(const ParamMap& params,
                                    const std::vector<std::string_view>& prefixes);

/// Prefixes of everything the image path touches.
inline const std::vector<std::string_view> kImageTower{"stem.", "stage",
                                                                     "image_head."};
inline constexpr std::string_view kRadiomicsTower = "radiomics_head.";
inline constexpr std::string_view kClassifier = "classifier.";

/// Independent leaf copies of the given parameters (for per-sample tapes).
ParamMap clone(const ParamMap& params);

/// Captured intermediate state of a forward pass.
struct ForwardTrace {
  /// Sigmoid mask of the last attention module, c x h x w.
  ad::Tensor last_attention_mask;
};

/// Residual block: relu(conv(relu(conv(x))) + shortcut(x)).
ad::Tensor residual_block(ad::Tape& tape, const ad::Tensor& x, const ParamMap& params,
                          const std::string& prefix);

/// (1 + M(x)) * T(x): T is two residual blocks, M is
/// maxpool -> conv -> nearest upsample -> sigmoid.
ad::Tensor attention_module_forward(ad::Tape& tape, const ad::Tensor& x, const ParamMap& params,
                                    const std::string& prefix, ad::Tensor* mask_out = nullptr);

/// Resizes to the configured resolution and scales to [0, 1]: 1 x R x R.
ad::Tensor image_input(const GrayImage& image, const BackboneConfig& config);

/// Image embedding u (length embedding_dim) from a 1 x R x R input.
ad::Tensor encode_image(ad::Tape& tape, const ad::Tensor& input, const ParamMap& params,
                        const BackboneConfig& config, ForwardTrace* trace = nullptr);

/// Radiomics embedding(s): 102 -> N x 128 (or a 102-vector -> 128-vector).
/// Inputs are expected to be standardized already.
ad::Tensor encode_radiomics(ad::Tape& tape, const ad::Tensor& features, const ParamMap& params,
                            const BackboneConfig& config);

/// Pre-sigmoid score w^T u + b, shape [1].
ad::Tensor classifier_logit(ad::Tape& tape, const ad::Tensor& embedding, const ParamMap& params);
/// sigmoid(w^T u + b), shape [1].
ad::Tensor classify(ad::Tape& tape, const ad::Tensor& embedding, const ParamMap& params);

/// Final attention mask, channel-averaged, resized to the input resolution
/// and min-max normalized into [0, 1] (all zeros if the map is flat).
std::vector<float> extract_attention_map(const GrayImage& image, const ParamMap& params,
                                         const BackboneConfig& config);

}  // namespace radiocon::model
