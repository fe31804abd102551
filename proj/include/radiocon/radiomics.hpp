#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "radiocon/image.hpp"

// Two-dimensional radiomics: first-order statistics, texture matrices
// (GLCM, GLRLM, GLSZM, NGTDM, GLDM) and pixel-based shape descriptors,
// computed over a region of interest.
//
// Gray levels are 1-based throughout: level g lives at matrix row g - 1.
namespace radiocon::radiomics {

inline constexpr std::size_t kShapeCount = 9;
inline constexpr std::size_t kFirstOrderCount = 18;
inline constexpr std::size_t kGlcmCount = 24;
inline constexpr std::size_t kGlrlmCount = 16;
inline constexpr std::size_t kGlszmCount = 16;
inline constexpr std::size_t kNgtdmCount = 5;
inline constexpr std::size_t kGldmCount = 14;
inline constexpr std::size_t kFeatureCount = kShapeCount + kFirstOrderCount + kGlcmCount +
                                             kGlrlmCount + kGlszmCount + kNgtdmCount + kGldmCount;
static_assert(kFeatureCount == 102);

inline constexpr std::string_view kSchemaId = "radiocon-2d-v1";
/// Coarseness is capped at 1/kCoarsenessEpsilon when its denominator vanishes.
inline constexpr double kCoarsenessEpsilon = 1e-12;

/// Column names in vector order, e.g. "glcm_Contrast".
std::span<const std::string> feature_names();

struct RoiMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height &&
           bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
  std::size_t count() const;

  friend bool operator==(const RoiMask&, const RoiMask&) = default;
};

/// Per-pixel gray level in [1, gray_levels] inside the ROI, 0 outside.
struct DiscretizedRoi {
  int width = 0;
  int height = 0;
  int gray_levels = 0;
  std::vector<int> levels;

  int at(int x, int y) const {
    if (x < 0 || y < 0 || x >= width || y >= height) return 0;
    return levels[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t roi_size() const;
};

struct RadiomicsVector {
  std::array<double, kFeatureCount> values{};
  std::string schema_id{kSchemaId};
};

struct RadiomicsConfig {
  int bins = 32;
};

/// Pixel offset of one texture direction: 0, 45, 90 and 135 degrees.
struct Direction {
  int dx;
  int dy;
};
inline constexpr std::array<Direction, 4> kDirections{{{1, 0}, {1, -1}, {0, 1}, {1, 1}}};

/// Equal-width binning of ROI intensities into `bins` levels over the ROI
/// min..max. A constant ROI maps every pixel to level 1 with gray_levels 1.
DiscretizedRoi discretize(const GrayImage& image, const RoiMask& mask, int bins);

/// Energy, Entropy, Minimum, 10Percentile, 90Percentile, Maximum, Mean,
/// Median, InterquartileRange, Range, MeanAbsoluteDeviation,
/// RobustMeanAbsoluteDeviation, RootMeanSquared, Skewness, Kurtosis,
/// Variance, Uniformity, TotalEnergy. Entropy and Uniformity use the
/// `bins`-level histogram.
std::array<double, kFirstOrderCount> first_order_features(const GrayImage& image,
                                                          const RoiMask& mask, int bins = 32);

/// Symmetric co-occurrence counts at distance 1 along `dir`.
Eigen::MatrixXd cooccurrence_counts(const DiscretizedRoi& disc, Direction dir);
/// Equal-weight mean of the normalized matrices of every direction that has
/// at least one pair; a single 1x1 entry when there are no pairs at all.
Eigen::MatrixXd averaged_glcm(const DiscretizedRoi& disc);
std::array<double, kGlcmCount> glcm_features_from_matrix(const Eigen::MatrixXd& p);
std::array<double, kGlcmCount> glcm_features(const DiscretizedRoi& disc);

/// Run counts: row = gray level - 1, column = run length - 1.
Eigen::MatrixXd run_length_counts(const DiscretizedRoi& disc, Direction dir);
/// Zone counts from 8-connected same-level components: row = level - 1,
/// column = zone size - 1.
Eigen::MatrixXd size_zone_counts(const DiscretizedRoi& disc);
/// Dependence counts (alpha = 0, 8-neighbourhood): column = dependence - 1,
/// where dependence is 1 + number of equal-level neighbours in the ROI.
Eigen::MatrixXd dependence_counts(const DiscretizedRoi& disc);

std::array<double, kGlrlmCount> glrlm_features_from_matrix(const Eigen::MatrixXd& runs,
                                                           double roi_pixels);
std::array<double, kGlszmCount> glszm_features_from_matrix(const Eigen::MatrixXd& zones,
                                                           double roi_pixels);
std::array<double, kGldmCount> gldm_features_from_matrix(const Eigen::MatrixXd& deps);

struct RunZoneFeatures {
  std::array<double, kGlrlmCount> glrlm{};
  std::array<double, kGlszmCount> glszm{};
  std::array<double, kGldmCount> gldm{};
};
/// GLRLM is built from the equal-weight mean of the four directional run
/// matrices.
RunZoneFeatures run_zone_features(const DiscretizedRoi& disc);

/// Neighbourhood gray-tone difference table, indexed by level - 1.
struct NgtdmTable {
  std::vector<double> s;  // sum of |level - neighbourhood mean|
  std::vector<double> n;  // pixels of that level with at least one neighbour
};
NgtdmTable ngtdm_table(const DiscretizedRoi& disc);
std::array<double, kNgtdmCount> ngtdm_features_from_table(const NgtdmTable& table);
std::array<double, kNgtdmCount> ngtdm_features(const DiscretizedRoi& disc);

/// PixelSurface, Perimeter, PerimeterSurfaceRatio, Sphericity,
/// MaximumDiameter, MajorAxisLength, MinorAxisLength, Elongation,
/// MeshSurface. Unit pixel spacing.
std::array<double, kShapeCount> shape2d_features(const RoiMask& mask);

/// Maximum pixel-centre distance; only boundary pixels are compared.
double maximum_diameter(const RoiMask& mask);

/// Assembles the full vector. Without a box the whole image is the ROI.
RadiomicsVector extract_radiomics(const GrayImage& image,
                                  const std::optional<BoundingBox>& bbox,
                                  const RadiomicsConfig& config = {});

}  // namespace radiocon::radiomics
