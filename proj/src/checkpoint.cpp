#include "radiocon/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace radiocon::checkpoint {

namespace {

constexpr char kMagic[4] = {'R', 'C', 'O', 'N'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written as native little-endian floats");

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
  return static_cast<T>(v);
}

Phase phase_from_string(const std::string& s) {
  if (s == "pretrained") return Phase::pretrained;
  if (s == "finetuned") return Phase::finetuned;
  throw CheckpointError(CheckpointError::Kind::bad_header, "checkpoint: unknown phase '" + s + "'");
}

}  // namespace

std::string_view to_string(Phase phase) {
  return phase == Phase::pretrained ? "pretrained" : "finetuned";
}

std::vector<std::uint8_t> serialize(const Checkpoint& ckpt) {
  nlohmann::json directory = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : ckpt.params) {
    const std::uint64_t length = tensor.numel() * sizeof(float);
    directory.push_back({{"name", name}, {"shape", tensor.shape()}, {"offset", offset}, {"length", length}});
    offset += length;
  }
  nlohmann::json header;
  header["phase"] = std::string(to_string(ckpt.phase));
  header["config"] = to_json(ckpt.config);
  header["feature_stats"] = {{"mean", ckpt.feature_stats.mean}, {"stddev", ckpt.feature_stats.stddev}};
  header["tensors"] = std::move(directory);
  header["payload_bytes"] = offset;
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const auto& [name, tensor] : ckpt.params) {
    const auto* raw = reinterpret_cast<const std::uint8_t*>(tensor.values().data());
    out.insert(out.end(), raw, raw + tensor.numel() * sizeof(float));
  }
  return out;
}

Checkpoint deserialize(std::span<const std::uint8_t> bytes) {
  using Kind = CheckpointError::Kind;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw CheckpointError(Kind::bad_magic, "checkpoint: missing RCON magic bytes");
  }
  if (bytes.size() < 16) throw CheckpointError(Kind::truncated, "checkpoint: truncated preamble");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kFormatVersion) {
    throw CheckpointError(Kind::bad_version, "checkpoint: format version " + std::to_string(version) +
                                                 " is not supported (this reader handles version " +
                                                 std::to_string(kFormatVersion) + ")");
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - 16) {
    throw CheckpointError(Kind::truncated, "checkpoint: truncated JSON header");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::bad_header, std::string("checkpoint: invalid JSON header: ") + e.what());
  }
  const auto payload = bytes.subspan(16 + header_len);

  Checkpoint ckpt;
  try {
    ckpt.phase = phase_from_string(header.at("phase").get<std::string>());
    ckpt.config = config_from_json(header.at("config"));
    ckpt.feature_stats.mean = header.at("feature_stats").at("mean").get<std::vector<double>>();
    ckpt.feature_stats.stddev = header.at("feature_stats").at("stddev").get<std::vector<double>>();
    const auto declared = header.at("payload_bytes").get<std::uint64_t>();
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<ad::Shape>();
      const auto offset = entry.at("offset").get<std::uint64_t>();
      const auto length = entry.at("length").get<std::uint64_t>();
      const std::uint64_t expected = ad::shape_numel(shape) * sizeof(float);
      if (length != expected || offset + length > payload.size()) {
        throw CheckpointError(Kind::payload_mismatch,
                              "checkpoint: payload length mismatch for tensor '" + name + "' (shape " +
                                  ad::shape_string(shape) + " needs " + std::to_string(expected) +
                                  " bytes, " + std::to_string(payload.size() > offset ? payload.size() - offset : 0) +
                                  " available)");
      }
      std::vector<float> values(ad::shape_numel(shape));
      std::memcpy(values.data(), payload.data() + offset, length);
      ckpt.params.emplace(name, ad::Tensor::parameter(shape, std::move(values)));
    }
    if (declared != payload.size()) {
      throw CheckpointError(Kind::payload_mismatch,
                            "checkpoint: payload length mismatch (declared " + std::to_string(declared) +
                                " bytes, found " + std::to_string(payload.size()) + ")");
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::bad_header, std::string("checkpoint: malformed header: ") + e.what());
  } catch (const ParameterError& e) {
    throw CheckpointError(Kind::bad_header, std::string("checkpoint: bad config: ") + e.what());
  }
  return ckpt;
}

void save(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = serialize(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::io, "short write to " + path.string());
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace radiocon::checkpoint
