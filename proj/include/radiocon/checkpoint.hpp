#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "radiocon/config.hpp"
#include "radiocon/model.hpp"

// Binary checkpoint layout:
//   "RCON" | u32 version | u64 header length | UTF-8 JSON header | payload
// The header carries the config, radiomics standardization statistics, the
// training phase and a tensor directory (name, shape, byte offset, byte
// length). The payload is little-endian float32 data in directory order.
namespace radiocon::checkpoint {

inline constexpr std::uint32_t kFormatVersion = 1;

enum class Phase { pretrained, finetuned };

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

struct Checkpoint {
  TrainConfig config;
  FeatureStats feature_stats;
  model::ParamMap params;
  Phase phase = Phase::pretrained;
};

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, bad_version, truncated, bad_header, payload_mismatch };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt);
Checkpoint deserialize(std::span<const std::uint8_t> bytes);

void save(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load(const std::filesystem::path& path);

std::string_view to_string(Phase phase);

}  // namespace radiocon::checkpoint
