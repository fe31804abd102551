#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace radiocon {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major 8-bit grayscale raster.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return pixels.empty(); }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Axis-aligned box: top-left corner plus extent, in pixels.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool intersects(int width, int height) const {
    return w >= 1 && h >= 1 && x < width && y < height && right() > 0 && bottom() > 0;
  }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Tight union of two boxes.
BoundingBox box_union(const BoundingBox& a, const BoundingBox& b);

// Reads 8-bit PNG (grayscale, or RGB converted by luma) or binary PGM (P5).
GrayImage read_image(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

/// Bilinear resampling with pixel-centre alignment. Output is in [0, 1].
std::vector<float> resize_bilinear(const GrayImage& image, int width, int height);

/// Bilinear resampling of a float map (pixel-centre alignment).
std::vector<float> resize_bilinear(const std::vector<float>& map, int width, int height,
                                   int out_width, int out_height);

}  // namespace radiocon
