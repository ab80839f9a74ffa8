#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crowdcount {

/// Row-major grayscale raster with intensities nominally in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, double fill = 0.0);
  /// Takes ownership of `data`; throws if the size does not match or a value is non-finite.
  GrayImage(std::size_t width, std::size_t height, std::vector<double> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }

  std::span<const double> pixels() const noexcept { return data_; }
  std::span<double> pixels() noexcept { return data_; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
};

/// Axis-aligned pixel rectangle. Membership is half-open: [row, row+height) x [col, col+width).
struct CellRect {
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t area() const noexcept { return height * width; }
  /// (x, y) in image coordinates, x = column.
  bool contains(double x, double y) const noexcept {
    return y >= static_cast<double>(row) && y < static_cast<double>(row + height) &&
           x >= static_cast<double>(col) && x < static_cast<double>(col + width);
  }
  bool operator==(const CellRect&) const = default;
};

/// A cell of a parent image together with a copy of its pixels.
struct Patch {
  CellRect rect;
  GrayImage pixels;
};

/// Square grid cells. Trailing remainders shorter than half a cell are merged into the
/// previous cell; longer ones form a cell of their own. An axis shorter than one cell
/// yields a single cell spanning it.
struct GridSpec {
  std::size_t cell_size = 128;
};

inline constexpr std::size_t kMinGridCellSize = 32;
inline constexpr std::size_t kMinCellSide = 16;

struct MomentStats {
  double entropy = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;  // excess
};

// --- PNM ---------------------------------------------------------------------

/// Decodes 8-bit binary PGM (P5) or PPM (P6). Colour is reduced with Rec.601 luma.
GrayImage decode_image(std::string_view bytes);
GrayImage read_image(const std::string& path);

/// Encodes as P5 with rounding to the nearest 8-bit level (values clamped to [0,1]).
std::string encode_pgm(const GrayImage& img);

// --- Pixel operations --------------------------------------------------------

/// Gradient magnitude with central differences inside and one-sided differences on the border.
GrayImage gradient_magnitude(const GrayImage& img);
Patch gradient_magnitude(const Patch& patch);

/// Axis split used by partition(): returns (offset, length) pairs along one dimension.
std::vector<std::pair<std::size_t, std::size_t>> split_axis(std::size_t length,
                                                            std::size_t cell_size);

/// Disjoint row-major cell layout for an image of the given size.
std::vector<CellRect> grid_cells(std::size_t width, std::size_t height, const GridSpec& grid);

/// Windows of `cell_size` placed every `stride` pixels (training-time dense sampling).
/// Axes shorter than a cell contribute a single window spanning them.
std::vector<CellRect> sample_cells(std::size_t width, std::size_t height, std::size_t cell_size,
                                   std::size_t stride);

GrayImage crop(const GrayImage& img, const CellRect& rect);

std::vector<Patch> partition(const GrayImage& img, const GridSpec& grid);

/// Bilinear resampling to the requested size (pixel-centre aligned).
GrayImage resize_bilinear(const GrayImage& img, std::size_t width, std::size_t height);

/// Separable Gaussian blur with reflected borders.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

// --- Statistics --------------------------------------------------------------

/// Population mean/variance, standardized skewness, excess kurtosis, and 256-bin entropy
/// (nats) of the min-max normalized values. Zero-variance input reports 0 for the
/// higher moments and the entropy.
MomentStats moment_stats(std::span<const double> values);

}  // namespace crowdcount
