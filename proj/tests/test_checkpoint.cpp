#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "radiocon/checkpoint.hpp"
#include "radiocon/config.hpp"
#include "radiocon/data.hpp"

using namespace radiocon;
using namespace radiocon::checkpoint;
namespace fs = std::filesystem;

namespace {

Checkpoint small_checkpoint() {
  Checkpoint c;
  c.config.stem_channels = 2;
  c.config.stage_channels = {2, 3};
  c.config.hidden_dim = 4;
  c.config.resolution = 32;
  c.config.tau = 0.25;
  c.params = model::init_params(c.config.backbone(), 11);
  model::attach_classifier(c.params, c.config.backbone());
  c.feature_stats.mean.assign(model::kRadiomicsDim, 0.1);
  c.feature_stats.stddev.assign(model::kRadiomicsDim, 3.0);
  c.phase = Phase::finetuned;
  return c;
}

CheckpointError::Kind kind_of(std::span<const std::uint8_t> bytes) {
  try {
    deserialize(bytes);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return CheckpointError::Kind::io;
}

}  // namespace

TEST_CASE("checkpoint round-trip is byte identical") {
  const auto ckpt = small_checkpoint();
  const auto bytes = serialize(ckpt);
  CHECK(std::memcmp(bytes.data(), "RCON", 4) == 0);
  const auto back = deserialize(bytes);
  CHECK(back.config == ckpt.config);
  CHECK(back.feature_stats == ckpt.feature_stats);
  CHECK(back.phase == Phase::finetuned);
  REQUIRE(back.params.size() == ckpt.params.size());
  for (const auto& [name, t] : ckpt.params) {
    const auto& u = back.params.at(name);
    CHECK(u.shape() == t.shape());
    CHECK(std::equal(t.values().begin(), t.values().end(), u.values().begin()));
    CHECK(u.requires_grad());
  }
  CHECK(serialize(back) == bytes);

  const auto dir = fs::temp_directory_path() / ("radiocon_ckpt_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  save(dir / "a.ckpt", ckpt);
  save(dir / "b.ckpt", load(dir / "a.ckpt"));
  std::ifstream a(dir / "a.ckpt", std::ios::binary), b(dir / "b.ckpt", std::ios::binary);
  const std::string sa{std::istreambuf_iterator<char>(a), {}}, sb{std::istreambuf_iterator<char>(b), {}};
  CHECK(sa == sb);
  CHECK(sa.size() == bytes.size());
  fs::remove_all(dir);
  CHECK_THROWS_AS(load(dir / "missing.ckpt"), CheckpointError);
}

TEST_CASE("checkpoint errors are structured") {
  using Kind = CheckpointError::Kind;
  const auto bytes = serialize(small_checkpoint());

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(kind_of(bad_magic) == Kind::bad_magic);
  CHECK(kind_of(std::span(bytes).first(2)) == Kind::bad_magic);

  auto bad_version = bytes;
  bad_version[4] = 7;
  CHECK(kind_of(bad_version) == Kind::bad_version);
  CHECK_THROWS_WITH(deserialize(bad_version), doctest::Contains("version 7"));

  CHECK(kind_of(std::span(bytes).first(12)) == Kind::truncated);
  CHECK(kind_of(std::span(bytes).first(40)) == Kind::truncated);

  // Dropping the tail of the payload names the tensor that no longer fits.
  const auto truncated = std::span(bytes).first(bytes.size() - 3);
  CHECK(kind_of(truncated) == Kind::payload_mismatch);
  CHECK_THROWS_WITH(deserialize(truncated), doctest::Contains("payload length mismatch for tensor 'stem.conv.weight'"));

  auto extended = bytes;
  extended.push_back(0);
  CHECK(kind_of(extended) == Kind::payload_mismatch);

  auto bad_json = bytes;
  bad_json[16] = '!';
  CHECK(kind_of(bad_json) == Kind::bad_header);
}

TEST_CASE("config text parsing") {
  const auto c = parse_config_text(
      "# comment\n"
      "tau = 0.2\n"
      "optimizer=adam   # trailing\n"
      "stage_channels=8,16\n"
      "\n"
      "similarity_kernel=dot_product\n"
      "batch_size=16\n");
  CHECK(c.tau == 0.2);
  CHECK(c.optimizer == optim::OptimizerKind::adam);
  CHECK(c.stage_channels == std::vector<int>{8, 16});
  CHECK(c.similarity_kernel == contrastive::SimilarityKernel::dot_product);
  CHECK(c.batch_size == 16);
  CHECK(c.lr == TrainConfig{}.lr);
  CHECK(config_from_json(to_json(c)) == c);

  CHECK_THROWS_WITH_AS(parse_config_text("bogus=1\n"), doctest::Contains("bogus"), ParameterError);
  CHECK_THROWS_WITH_AS(parse_config_text("tau\n"), doctest::Contains("line 1"), ParameterError);
  CHECK_THROWS_AS(parse_config_text("batch_size=abc\n"), ParameterError);
  CHECK_THROWS_AS(parse_config_text("optimizer=rmsprop\n"), ParameterError);
  CHECK_THROWS_AS(load_config_file("/nonexistent/radiocon.cfg"), DataError);
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  auto broken = [](auto mutate) {
    TrainConfig t;
    mutate(t);
    return t;
  };
  CHECK_THROWS_AS(broken([](TrainConfig& t) { t.tau = -1; }).validate(), ParameterError);
  CHECK_THROWS_AS(broken([](TrainConfig& t) { t.lr = 0; }).validate(), ParameterError);
  CHECK_THROWS_AS(broken([](TrainConfig& t) { t.batch_size = 0; }).validate(), ParameterError);
  CHECK_THROWS_AS(broken([](TrainConfig& t) { t.bins = 1; }).validate(), ParameterError);
  CHECK_THROWS_AS(broken([](TrainConfig& t) { t.stage_channels.clear(); }).validate(), ParameterError);
}
