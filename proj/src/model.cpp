#include "radiocon/model.hpp"

#include <algorithm>
#include <cmath>

#include "radiocon/data.hpp"

namespace radiocon::model {

using ad::Tensor;
using ad::Tape;

namespace {

struct ParamSpec {
  std::string name;
  ad::Shape shape;
  std::size_t fan_in;  // 0 => zero init
  double gain = 1.0;
};

// Output projections start near zero so both towers begin with nearly equal
// scores for every pair.
constexpr double kProjectionGain = 0.01;

void conv_specs(std::vector<ParamSpec>& out, const std::string& prefix, int in, int outc, int k) {
  out.push_back({prefix + ".weight",
                 {static_cast<std::size_t>(outc), static_cast<std::size_t>(in),
                  static_cast<std::size_t>(k), static_cast<std::size_t>(k)},
                 static_cast<std::size_t>(in * k * k)});
  if (k != 1) out.push_back({prefix + ".bias", {static_cast<std::size_t>(outc)}, 0});
}

void residual_specs(std::vector<ParamSpec>& out, const std::string& prefix, int in, int outc) {
  conv_specs(out, prefix + ".conv1", in, outc, 3);
  conv_specs(out, prefix + ".conv2", outc, outc, 3);
  if (in != outc) conv_specs(out, prefix + ".proj", in, outc, 1);
}

void linear_specs(std::vector<ParamSpec>& out, const std::string& prefix, int in, int outc,
                  double gain = 1.0) {
  out.push_back({prefix + ".weight",
                 {static_cast<std::size_t>(in), static_cast<std::size_t>(outc)},
                 static_cast<std::size_t>(in), gain});
  out.push_back({prefix + ".bias", {static_cast<std::size_t>(outc)}, 0});
}

std::vector<ParamSpec> param_specs(const BackboneConfig& config) {
  config.validate();
  std::vector<ParamSpec> specs;
  conv_specs(specs, "stem.conv", 1, config.stem_channels, 3);
  int channels = config.stem_channels;
  for (std::size_t s = 0; s < config.stage_channels.size(); ++s) {
    const std::string stage = "stage" + std::to_string(s + 1);
    const int c = config.stage_channels[s];
    residual_specs(specs, stage + ".res", channels, c);
    channels = c;
    for (int a = 1; a <= config.attention_modules; ++a) {
      const std::string attn = stage + ".attn" + std::to_string(a);
      residual_specs(specs, attn + ".trunk.res1", c, c);
      residual_specs(specs, attn + ".trunk.res2", c, c);
      conv_specs(specs, attn + ".mask.conv1", c, c, 3);
    }
  }
  linear_specs(specs, "image_head.fc1", channels, config.hidden_dim);
  linear_specs(specs, "image_head.fc2", config.hidden_dim, config.embedding_dim, kProjectionGain);
  linear_specs(specs, "radiomics_head.fc1", kRadiomicsDim, config.hidden_dim);
  linear_specs(specs, "radiomics_head.fc2", config.hidden_dim, config.embedding_dim, kProjectionGain);
  return specs;
}

Tensor conv(Tape& tape, const Tensor& x, const ParamMap& params, const std::string& prefix) {
  const Tensor& w = params.at(prefix + ".weight");
  const int k = static_cast<int>(w.dim(2));
  Tensor y = ad::conv2d(tape, x, w, 1, k / 2);
  auto bias = params.find(prefix + ".bias");
  if (bias != params.end()) y = ad::add_channel_bias(tape, y, bias->second);
  return y;
}

Tensor linear(Tape& tape, const Tensor& x, const ParamMap& params, const std::string& prefix) {
  return ad::add_row_bias(tape, ad::matmul(tape, x, params.at(prefix + ".weight")),
                          params.at(prefix + ".bias"));
}

}  // namespace

void BackboneConfig::validate() const {
  auto fail = [](const std::string& what) { throw ParameterError("backbone config: " + what); };
  if (embedding_dim != kEmbeddingDim) fail("embedding_dim must be 128");
  if (input_resolution < 32 || (input_resolution & (input_resolution - 1)) != 0) {
    fail("input_resolution must be a power of two >= 32");
  }
  if (stem_channels < 1 || hidden_dim < 1 || attention_modules < 1) {
    fail("channel counts and attention_modules must be positive");
  }
  if (stage_channels.empty()) fail("at least one stage is required");
  for (int c : stage_channels) {
    if (c < 1) fail("stage channels must be positive");
  }
  // Stem pool plus one pool between stages; the last attention mask pools once more.
  const int final_extent = input_resolution >> stage_channels.size();
  if (final_extent < 4) fail("too many stages for the input resolution");
}

ParamMap init_params(const BackboneConfig& config, std::uint64_t seed) {
  ParamMap params;
  for (const auto& spec : param_specs(config)) {
    std::vector<float> values(ad::shape_numel(spec.shape), 0.0f);
    if (spec.fan_in > 0) {
      auto rng = make_rng(seed, "init/" + spec.name);
      std::normal_distribution<double> normal(0.0, spec.gain * std::sqrt(2.0 / static_cast<double>(spec.fan_in)));
      for (auto& v : values) v = static_cast<float>(normal(rng));
    }
    params.emplace(spec.name, Tensor::parameter(spec.shape, std::move(values)));
  }
  return params;
}

void attach_classifier(ParamMap& params, const BackboneConfig& config) {
  const auto d = static_cast<std::size_t>(config.embedding_dim);
  params.insert_or_assign("classifier.weight", Tensor::zeros({d, 1}, true));
  params.insert_or_assign("classifier.bias", Tensor::zeros({1}, true));
}

std::size_t parameter_count(const BackboneConfig& config) {
  std::size_t total = 0;
  for (const auto& spec : param_specs(config)) total += ad::shape_numel(spec.shape);
  return total;
}

std::vector<ad::NamedTensor> select(const ParamMap& params,
                                    const std::vector<std::string_view>& prefixes) {
  std::vector<ad::NamedTensor> out;
  for (const auto& [name, tensor] : params) {
    for (auto prefix : prefixes) {
      if (name.starts_with(prefix)) {
        out.push_back({name, tensor});
        break;
      }
    }
  }
  return out;
}

ParamMap clone(const ParamMap& params) {
  ParamMap out;
  for (const auto& [name, tensor] : params) out.emplace(name, tensor.clone());
  return out;
}

Tensor residual_block(Tape& tape, const Tensor& x, const ParamMap& params,
                      const std::string& prefix) {
  Tensor h = ad::relu(tape, conv(tape, x, params, prefix + ".conv1"));
  h = conv(tape, h, params, prefix + ".conv2");
  const bool projected = params.contains(prefix + ".proj.weight");
  Tensor shortcut = projected ? conv(tape, x, params, prefix + ".proj") : x;
  return ad::relu(tape, ad::add(tape, h, shortcut));
}

Tensor attention_module_forward(Tape& tape, const Tensor& x, const ParamMap& params,
                                const std::string& prefix, Tensor* mask_out) {
  if (x.rank() != 3 || x.dim(1) < 4 || x.dim(2) < 4) {
    throw DimensionError("attention module needs a c x h x w input with h, w >= 4, got " +
                         ad::shape_string(x.shape()));
  }
  Tensor trunk = residual_block(tape, x, params, prefix + ".trunk.res1");
  trunk = residual_block(tape, trunk, params, prefix + ".trunk.res2");

  Tensor mask = ad::max_pool2d(tape, x, 2);
  mask = conv(tape, mask, params, prefix + ".mask.conv1");
  mask = ad::upsample_nearest(tape, mask, 2);
  mask = ad::sigmoid(tape, mask);
  if (mask_out) *mask_out = mask;

  const Tensor one = Tensor::constant_scalar(1.0f);
  return ad::mul(tape, ad::add(tape, one, mask), trunk);
}

Tensor image_input(const GrayImage& image, const BackboneConfig& config) {
  const int r = config.input_resolution;
  const auto n = static_cast<std::size_t>(r);
  return Tensor::constant({1, n, n}, resize_bilinear(image, r, r));
}

Tensor encode_image(Tape& tape, const Tensor& input, const ParamMap& params,
                    const BackboneConfig& config, ForwardTrace* trace) {
  const auto r = static_cast<std::size_t>(config.input_resolution);
  if (input.shape() != ad::Shape{1, r, r}) {
    throw DimensionError("encode_image expects input " + ad::shape_string({1, r, r}) + ", got " +
                         ad::shape_string(input.shape()));
  }
  Tensor x = ad::relu(tape, conv(tape, input, params, "stem.conv"));
  x = ad::max_pool2d(tape, x, 2);
  for (std::size_t s = 0; s < config.stage_channels.size(); ++s) {
    const std::string stage = "stage" + std::to_string(s + 1);
    if (s > 0) x = ad::max_pool2d(tape, x, 2);
    x = residual_block(tape, x, params, stage + ".res");
    for (int a = 1; a <= config.attention_modules; ++a) {
      Tensor mask;
      x = attention_module_forward(tape, x, params, stage + ".attn" + std::to_string(a), &mask);
      if (trace) trace->last_attention_mask = mask;
    }
  }
  Tensor pooled = ad::global_avg_pool(tape, x);
  Tensor h = ad::reshape(tape, pooled, {1, pooled.numel()});
  h = ad::relu(tape, linear(tape, h, params, "image_head.fc1"));
  h = linear(tape, h, params, "image_head.fc2");
  return ad::reshape(tape, h, {static_cast<std::size_t>(config.embedding_dim)});
}

Tensor encode_radiomics(Tape& tape, const Tensor& features, const ParamMap& params,
                        const BackboneConfig& config) {
  const bool single = features.rank() == 1;
  const bool batch_ok = features.rank() == 2 && features.dim(1) == kRadiomicsDim;
  const bool single_ok = single && features.numel() == kRadiomicsDim;
  if (!batch_ok && !single_ok) {
    throw DimensionError("encode_radiomics expects 102 features per row, got " +
                         ad::shape_string(features.shape()));
  }
  Tensor x = single ? ad::reshape(tape, features, {1, kRadiomicsDim}) : features;
  Tensor h = ad::relu(tape, linear(tape, x, params, "radiomics_head.fc1"));
  h = linear(tape, h, params, "radiomics_head.fc2");
  if (single) return ad::reshape(tape, h, {static_cast<std::size_t>(config.embedding_dim)});
  return h;
}

Tensor classifier_logit(Tape& tape, const Tensor& embedding, const ParamMap& params) {
  Tensor u = ad::reshape(tape, embedding, {1, embedding.numel()});
  Tensor z = linear(tape, u, params, "classifier");
  return ad::reshape(tape, z, {1});
}

Tensor classify(Tape& tape, const Tensor& embedding, const ParamMap& params) {
  return ad::sigmoid(tape, classifier_logit(tape, embedding, params));
}

std::vector<float> extract_attention_map(const GrayImage& image, const ParamMap& params,
                                         const BackboneConfig& config) {
  Tape tape;
  ForwardTrace trace;
  encode_image(tape, image_input(image, config), params, config, &trace);
  const Tensor& mask = trace.last_attention_mask;
  const std::size_t c = mask.dim(0), h = mask.dim(1), w = mask.dim(2);
  std::vector<float> averaged(h * w, 0.0f);
  auto mv = mask.values();
  for (std::size_t i = 0; i < h * w; ++i) {
    double acc = 0;
    for (std::size_t ch = 0; ch < c; ++ch) acc += mv[ch * h * w + i];
    averaged[i] = static_cast<float>(acc / static_cast<double>(c));
  }
  const int r = config.input_resolution;
  std::vector<float> map = resize_bilinear(averaged, static_cast<int>(w), static_cast<int>(h), r, r);
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  const float min = *lo, range = *hi - *lo;
  for (auto& v : map) v = range > 0.0f ? (v - min) / range : 0.0f;
  return map;
}

}  // namespace radiocon::model
