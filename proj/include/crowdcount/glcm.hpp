#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "crowdcount/imaging.hpp"

namespace crowdcount {

struct Regressor;

/// Quantized intensities, row-major, values in [0, levels).
struct LevelGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> levels;

  int at(std::size_t row, std::size_t col) const { return levels[row * width + col]; }
};

/// Pixel offsets at distance 1 for 0, 45, 90 and 135 degrees (image rows grow downward,
/// so 45 degrees points up and to the right).
struct GlcmOffset {
  int drow;
  int dcol;
};
inline constexpr std::array<GlcmOffset, 4> kGlcmOffsets{{{0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

struct GlcmDirectionFeatures {
  double dissimilarity = 0.0;
  double homogeneity = 0.0;
  double energy = 0.0;
  double entropy = 0.0;
  bool degenerate = false;  // no valid pixel pair in this direction
};

struct GlcmFeatures {
  std::array<GlcmDirectionFeatures, 4> directions;
  /// Variance, skewness, kurtosis of the flattened probabilities, per direction.
  std::array<std::array<double, 3>, 4> matrix_stats{};

  static constexpr std::size_t kFeatureCount = 16;
  static constexpr std::size_t kStatsCount = 12;

  /// (theta ascending) x (D, H, E, P).
  std::array<double, kFeatureCount> features() const;
  std::array<double, kStatsCount> stats() const;
};

/// Uniform bins over [0, 1]; 1.0 lands in the top bin and out-of-range values are clamped.
LevelGrid quantize(const GrayImage& img, int levels);

/// Normalized (levels x levels) co-occurrence matrix for one offset; ordered pairs,
/// not symmetrized. All zeros when no pair fits.
std::vector<double> cooccurrence(const LevelGrid& grid, int levels, GlcmOffset offset);

GlcmFeatures glcm_features(const LevelGrid& grid, int levels);

/// SVR estimate on the 16-feature vector, clamped at zero.
double glcm_count(const GlcmFeatures& features, const Regressor& model);

}  // namespace crowdcount
