// radiocon: command-line front end for contrastive radiomics pretraining.
//
//   radiocon synth            --out DIR [--count N] [--seed S]
//   radiocon extract-features --manifest CSV --images DIR --out CSV
//   radiocon pretrain         --manifest CSV --images DIR --out CKPT
//   radiocon finetune         --manifest CSV --images DIR (--ckpt CKPT | --from-scratch) --out CKPT
//   radiocon evaluate         --manifest CSV --images DIR --ckpt CKPT --out JSON
//   radiocon attention-map    --ckpt CKPT --image IMG --out PGM
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "radiocon/checkpoint.hpp"
#include "radiocon/config.hpp"
#include "radiocon/data.hpp"
#include "radiocon/image.hpp"
#include "radiocon/model.hpp"
#include "radiocon/pipeline.hpp"

namespace {

using namespace radiocon;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string manifest;
  std::string images;
  std::string config_path;
  std::string ckpt;
  std::string out;
  std::string image;
  std::string loss_csv;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> settings;
  bool from_scratch = false;
  std::size_t count = 512;
  double lesion_contrast = data::SyntheticOptions{}.lesion_contrast;
};

void log_line(const std::string& message) { std::cerr << message << '\n'; }

// Config precedence: base (defaults or checkpoint) < --config file < --set < --seed.
TrainConfig resolve_config(const Options& opt, TrainConfig base = {}) {
  TrainConfig config = opt.config_path.empty() ? std::move(base) : load_config_file(opt.config_path, std::move(base));
  for (const auto& kv : opt.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opt.seed) config.seed = *opt.seed;
  config.validate();
  return config;
}

std::vector<data::Sample> load_samples(const Options& opt) {
  auto loaded = data::load_manifest(opt.manifest, opt.images);
  if (!loaded.errors.empty()) {
    for (const auto& e : loaded.errors) log_line("error: " + e);
    throw DataError(std::to_string(loaded.errors.size()) + " manifest entries could not be loaded");
  }
  return std::move(loaded.samples);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("short write to " + path);
}

std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

int cmd_synth(const Options& opt) {
  data::SyntheticOptions so;
  so.count = opt.count;
  so.seed = opt.seed.value_or(so.seed);
  so.lesion_contrast = opt.lesion_contrast;
  const auto samples = data::generate_synthetic_dataset(so, opt.out);
  log_line("wrote " + std::to_string(samples.size()) + " samples to " + opt.out);
  return 0;
}

int cmd_extract_features(const Options& opt) {
  const auto config = resolve_config(opt);
  const auto samples = load_samples(opt);
  std::vector<std::string> errors;
  write_text(opt.out, pipeline::feature_csv(samples, config.bins, &errors));
  for (const auto& e : errors) log_line("error: " + e);
  return errors.empty() ? 0 : kExitData;
}

int cmd_pretrain(const Options& opt) {
  const auto config = resolve_config(opt);
  const auto samples = load_samples(opt);
  const auto split = data::split_dataset(samples, config.seed);
  pipeline::RadiomicsCache cache;
  const auto result = pipeline::pretrain(samples, split, config, cache, log_line);
  checkpoint::save(opt.out, result.checkpoint);
  write_text(opt.loss_csv.empty() ? sibling(opt.out, "_loss.csv") : opt.loss_csv,
             pipeline::loss_curve_csv(result.loss_curve));
  return 0;
}

int cmd_finetune(const Options& opt) {
  std::optional<checkpoint::Checkpoint> initial;
  if (opt.from_scratch) {
    if (!opt.ckpt.empty()) throw UsageError("--from-scratch and --ckpt are mutually exclusive");
  } else {
    if (opt.ckpt.empty()) throw UsageError("finetune needs --ckpt (a pretrained checkpoint) or --from-scratch");
    initial = checkpoint::load(opt.ckpt);
    if (initial->phase != checkpoint::Phase::pretrained) {
      throw UsageError("checkpoint " + opt.ckpt + " is already fine-tuned; pass a pretrained checkpoint");
    }
  }
  const auto config = resolve_config(opt, initial ? initial->config : TrainConfig{});
  if (initial && config.backbone() != initial->config.backbone()) {
    throw UsageError("architecture settings cannot differ from the pretrained checkpoint");
  }
  const auto samples = load_samples(opt);
  const auto split = data::split_dataset(samples, config.seed);
  const auto result = pipeline::finetune(samples, split, initial, config, log_line);
  checkpoint::save(opt.out, result.checkpoint);
  write_text(opt.loss_csv.empty() ? sibling(opt.out, "_loss.csv") : opt.loss_csv,
             pipeline::loss_curve_csv(result.loss_curve));
  return 0;
}

int cmd_evaluate(const Options& opt) {
  const auto ckpt = checkpoint::load(opt.ckpt);
  if (ckpt.phase != checkpoint::Phase::finetuned) {
    throw UsageError("checkpoint " + opt.ckpt + " has not been fine-tuned");
  }
  const auto config = resolve_config(opt, ckpt.config);
  const auto samples = load_samples(opt);
  // The split must be the one the checkpoint was trained against.
  const auto split = data::split_dataset(samples, ckpt.config.seed);
  auto report = pipeline::evaluate(samples, split, ckpt, config.threads);
  for (const auto& w : report.warnings) log_line("warning: " + w);
  write_text(opt.out, metrics::to_json(report).dump(2) + "\n");
  return 0;
}

int cmd_attention_map(const Options& opt) {
  const auto ckpt = checkpoint::load(opt.ckpt);
  const auto backbone = ckpt.config.backbone();
  const GrayImage image = read_image(opt.image);
  const auto map = model::extract_attention_map(image, ckpt.params, backbone);
  const int r = backbone.input_resolution;

  GrayImage heat(r, r);
  for (std::size_t i = 0; i < map.size(); ++i) {
    heat.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(map[i], 0.0f, 1.0f) * 255.0f));
  }
  write_pgm(opt.out, heat);

  const auto resized = resize_bilinear(image, r, r);
  GrayImage composite(2 * r, r);
  for (int y = 0; y < r; ++y) {
    for (int x = 0; x < r; ++x) {
      const auto i = static_cast<std::size_t>(y) * r + x;
      composite.at(x, y) = static_cast<std::uint8_t>(std::lround(resized[i] * 255.0f));
      composite.at(r + x, y) = heat.pixels[i];
    }
  }
  write_pgm(sibling(opt.out, "_composite.pgm"), composite);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contrastive radiomics pretraining for chest X-ray classification"};
  app.require_subcommand(1);
  Options opt;

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--manifest", opt.manifest, "patientId,x,y,width,height,Target CSV")->required();
    sub->add_option("--images", opt.images, "Directory holding <patientId>.png or .pgm")->required();
  };
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "key=value config file");
    sub->add_option("--set", opt.settings, "Override one config key (key=value); repeatable");
    sub->add_option("--seed", opt.seed, "Root seed");
  };

  auto* synth = app.add_subcommand("synth", "Generate the synthetic lesion dataset");
  synth->add_option("--out", opt.out, "Output directory")->required();
  synth->add_option("--count", opt.count, "Number of samples")->check(CLI::PositiveNumber);
  synth->add_option("--seed", opt.seed, "Generator seed");
  synth->add_option("--lesion-contrast", opt.lesion_contrast, "Lesion brightness above background");

  auto* extract = app.add_subcommand("extract-features", "Export radiomics features as CSV");
  add_data(extract);
  add_config(extract);
  extract->add_option("--out", opt.out, "Output CSV")->required();

  auto* pre = app.add_subcommand("pretrain", "Contrastive pretraining of both towers");
  add_data(pre);
  add_config(pre);
  pre->add_option("--out", opt.out, "Output checkpoint")->required();
  pre->add_option("--loss-csv", opt.loss_csv, "Per-epoch loss CSV (default <out>_loss.csv)");

  auto* fine = app.add_subcommand("finetune", "Supervised fine-tuning with a classifier head");
  add_data(fine);
  add_config(fine);
  fine->add_option("--ckpt", opt.ckpt, "Pretrained checkpoint");
  fine->add_flag("--from-scratch", opt.from_scratch, "Start from random weights (baseline)");
  fine->add_option("--out", opt.out, "Output checkpoint")->required();
  fine->add_option("--loss-csv", opt.loss_csv, "Per-epoch loss CSV (default <out>_loss.csv)");

  auto* eval = app.add_subcommand("evaluate", "Image-only evaluation on the test split");
  add_data(eval);
  eval->add_option("--config", opt.config_path, "key=value config file (runtime keys only)");
  eval->add_option("--set", opt.settings, "Override one config key (key=value); repeatable");
  eval->add_option("--ckpt", opt.ckpt, "Fine-tuned checkpoint")->required();
  eval->add_option("--out", opt.out, "Output metrics JSON")->required();

  auto* attn = app.add_subcommand("attention-map", "Export the final attention mask");
  attn->add_option("--ckpt", opt.ckpt, "Checkpoint")->required();
  attn->add_option("--image", opt.image, "Input PNG or PGM")->required();
  attn->add_option("--out", opt.out, "Heat-map PGM; the composite goes to <out>_composite.pgm")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(opt);
    if (*extract) return cmd_extract_features(opt);
    if (*pre) return cmd_pretrain(opt);
    if (*fine) return cmd_finetune(opt);
    if (*eval) return cmd_evaluate(opt);
    if (*attn) return cmd_attention_map(opt);
  } catch (const UsageError& e) {
    log_line(std::string("usage error: ") + e.what());
    return kExitUsage;
  } catch (const ParameterError& e) {
    log_line(std::string("config error: ") + e.what());
    return kExitUsage;
  } catch (const pipeline::NumericError& e) {
    log_line(std::string("numeric failure: ") + e.what());
    return kExitNumeric;
  } catch (const DomainError& e) {
    log_line(std::string("numeric failure: ") + e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    log_line(std::string("error: ") + e.what());
    return kExitData;
  }
  return kExitUsage;
}
