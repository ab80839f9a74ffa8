#pragma once

#include <array>
#include <cstddef>

#include "crowdcount/imaging.hpp"

namespace crowdcount {

struct Regressor;

/// One level of the orthonormal 2-D Haar transform. The first letter names the filter
/// applied along rows (horizontal), the second along columns.
struct HaarLevel {
  GrayImage ll, lh, hl, hh;
};

/// Single analysis step. Odd lengths are first extended by repeating the last sample
/// (half-sample symmetric extension).
HaarLevel haar_step(const GrayImage& img);

inline constexpr std::size_t kWaveletLevels = 3;
inline constexpr std::size_t kSubbandCount = 1 + 3 * kWaveletLevels;

/// Pyramid decomposition: sub-images ordered [LL3, LH3, HL3, HH3, LH2, HL2, HH2, LH1, HL1, HH1].
std::array<GrayImage, kSubbandCount> haar_pyramid(const GrayImage& img);

struct WaveletFeatures {
  /// Mean absolute coefficient of each sub-image, in pyramid order.
  std::array<double, kSubbandCount> energies{};
  /// Variance, skewness, kurtosis of each sub-image, in pyramid order.
  std::array<double, 3 * kSubbandCount> subband_stats{};
};

WaveletFeatures wavelet_features(const GrayImage& patch);

/// SVR estimate on the 10 energies, clamped at zero.
double wavelet_count(const WaveletFeatures& features, const Regressor& model);

}  // namespace crowdcount
