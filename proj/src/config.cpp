#include "radiocon/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

#include "radiocon/data.hpp"

namespace radiocon {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParameterError("config: cannot parse " + std::string(key) + "='" + std::string(text) + "'");
  }
  return value;
}

std::vector<int> parse_int_list(std::string_view key, std::string_view text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.push_back(parse_number<int>(key, piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  contrastive().validate();
  if (!(lr > 0)) throw ParameterError("lr must be > 0");
  if (momentum < 0 || momentum >= 1) throw ParameterError("momentum must be in [0, 1)");
  if (patience < 1) throw ParameterError("patience must be >= 1");
  if (max_epochs < 1) throw ParameterError("max_epochs must be >= 1");
  if (batch_size < 1) throw ParameterError("batch_size must be >= 1");
  if (bins < 2) throw ParameterError("bins must be >= 2");
  if (min_improvement < 0) throw ParameterError("min_improvement must be >= 0");
  if (threads < 0) throw ParameterError("threads must be >= 0");
  backbone().validate();
}

contrastive::ContrastiveConfig TrainConfig::contrastive() const {
  return {tau, p, lambda, similarity_kernel};
}

model::BackboneConfig TrainConfig::backbone() const {
  model::BackboneConfig b;
  b.input_resolution = resolution;
  b.stem_channels = stem_channels;
  b.stage_channels = stage_channels;
  b.attention_modules = attention_modules;
  b.hidden_dim = hidden_dim;
  return b;
}

optim::OptimizerConfig TrainConfig::optimizer_config() const {
  optim::OptimizerConfig o;
  o.kind = optimizer;
  o.lr = lr;
  o.momentum = momentum;
  return o;
}

void apply_setting(TrainConfig& c, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "tau") c.tau = parse_number<double>(key, value);
  else if (key == "p") c.p = parse_number<double>(key, value);
  else if (key == "lambda") c.lambda = parse_number<double>(key, value);
  else if (key == "lr") c.lr = parse_number<double>(key, value);
  else if (key == "optimizer") c.optimizer = optim::optimizer_from_string(value);
  else if (key == "momentum") c.momentum = parse_number<double>(key, value);
  else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, value);
  else if (key == "max_epochs") c.max_epochs = parse_number<int>(key, value);
  else if (key == "patience") c.patience = parse_number<int>(key, value);
  else if (key == "min_improvement") c.min_improvement = parse_number<double>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "resolution") c.resolution = parse_number<int>(key, value);
  else if (key == "bins") c.bins = parse_number<int>(key, value);
  else if (key == "similarity_kernel") c.similarity_kernel = contrastive::kernel_from_string(value);
  else if (key == "stem_channels") c.stem_channels = parse_number<int>(key, value);
  else if (key == "stage_channels") c.stage_channels = parse_int_list(key, value);
  else if (key == "attention_modules") c.attention_modules = parse_number<int>(key, value);
  else if (key == "hidden_dim") c.hidden_dim = parse_number<int>(key, value);
  else if (key == "threads") c.threads = parse_number<int>(key, value);
  else throw ParameterError("config: unknown key '" + std::string(key) + "'");
}

TrainConfig parse_config_text(std::string_view text, TrainConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ParameterError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(base, trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return base;
}

TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), std::move(base));
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"tau", c.tau},
          {"p", c.p},
          {"lambda", c.lambda},
          {"lr", c.lr},
          {"optimizer", std::string(optim::to_string(c.optimizer))},
          {"momentum", c.momentum},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"min_improvement", c.min_improvement},
          {"seed", c.seed},
          {"resolution", c.resolution},
          {"bins", c.bins},
          {"similarity_kernel", std::string(contrastive::to_string(c.similarity_kernel))},
          {"stem_channels", c.stem_channels},
          {"stage_channels", c.stage_channels},
          {"attention_modules", c.attention_modules},
          {"hidden_dim", c.hidden_dim}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.tau = j.at("tau").get<double>();
  c.p = j.at("p").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.lr = j.at("lr").get<double>();
  c.optimizer = optim::optimizer_from_string(j.at("optimizer").get<std::string>());
  c.momentum = j.at("momentum").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.min_improvement = j.at("min_improvement").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.resolution = j.at("resolution").get<int>();
  c.bins = j.at("bins").get<int>();
  c.similarity_kernel = contrastive::kernel_from_string(j.at("similarity_kernel").get<std::string>());
  c.stem_channels = j.at("stem_channels").get<int>();
  c.stage_channels = j.at("stage_channels").get<std::vector<int>>();
  c.attention_modules = j.at("attention_modules").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  return c;
}

}  // namespace radiocon
