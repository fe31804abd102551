#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "radiocon/image.hpp"
#include "radiocon/radiomics.hpp"

namespace radiocon {

/// Bad input data (manifest syntax, missing files, unusable datasets).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeds an independent generator for `label` from a root seed, so each
/// consumer draws from its own stream regardless of call order.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);
std::mt19937_64 make_rng(std::uint64_t root, std::string_view label);

}  // namespace radiocon

namespace radiocon::data {

enum class Label : int { normal = 0, pneumonia = 1 };

struct Sample {
  std::string id;
  GrayImage image;
  Label label = Label::normal;
  std::optional<BoundingBox> bbox;
};

struct ManifestLoad {
  std::vector<Sample> samples;
  /// One message per sample that could not be loaded (missing image, ...).
  std::vector<std::string> errors;
};

/// Reads an RSNA-style `patientId,x,y,width,height,Target` manifest and the
/// matching `<image_dir>/<patientId>.png|.pgm` files. Several boxes for one
/// patient are merged into their tight union. Samples keep first-appearance
/// order. Throws DataError (with line number) on a malformed row.
ManifestLoad load_manifest(const std::filesystem::path& csv_path,
                           const std::filesystem::path& image_dir);

/// ROI covering the box clipped to the image, or the whole image when the
/// box is absent.
radiomics::RoiMask roi_mask_from_bbox(const GrayImage& image,
                                      const std::optional<BoundingBox>& bbox);

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;
  /// False when the labels could not be stratified (a class with < 2 samples).
  bool stratified = true;
};

/// Seeded, label-stratified 75/25 split; the train side gets round(0.75 n).
DatasetSplit split_dataset(const std::vector<Sample>& samples, std::uint64_t seed);

enum class BatchMode { contrastive, supervised };

/// Seeded per-epoch shuffle cut into batches. Contrastive mode drops the
/// final partial batch and requires batch_size >= 2.
std::vector<std::vector<std::string>> make_batches(const std::vector<std::string>& ids,
                                                   std::size_t batch_size,
                                                   std::uint64_t epoch_seed, BatchMode mode);

struct SyntheticOptions {
  std::size_t count = 512;
  std::uint64_t seed = 7;
  int resolution = 64;
  /// Peak brightness added by a lesion, in gray levels.
  double lesion_contrast = 100.0;
};

/// Images only; `write_synthetic_dataset` puts them on disk.
std::vector<Sample> generate_synthetic_samples(const SyntheticOptions& options);

/// Generates the samples and writes `<dir>/images/<id>.png` plus
/// `<dir>/manifest.csv`.
std::vector<Sample> generate_synthetic_dataset(const SyntheticOptions& options,
                                               const std::filesystem::path& dir);

void write_manifest(const std::filesystem::path& csv_path, const std::vector<Sample>& samples);

}  // namespace radiocon::data
