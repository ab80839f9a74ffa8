#include "crowdcount/wavelet.hpp"

#include <algorithm>
#include <cmath>

#include "crowdcount/error.hpp"
#include "crowdcount/learn/regressor.hpp"

namespace crowdcount {

HaarLevel haar_step(const GrayImage& img) {
  require(img.width() >= 1 && img.height() >= 1, "haar_step: empty image");
  const std::size_t w = img.width(), h = img.height();
  const std::size_t ow = (w + 1) / 2, oh = (h + 1) / 2;
  auto px = [&](std::size_t r, std::size_t c) { return img.at(std::min(r, h - 1), std::min(c, w - 1)); };

  HaarLevel out{GrayImage(ow, oh), GrayImage(ow, oh), GrayImage(ow, oh), GrayImage(ow, oh)};
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      const double a = px(2 * r, 2 * c), b = px(2 * r, 2 * c + 1);
      const double d = px(2 * r + 1, 2 * c), e = px(2 * r + 1, 2 * c + 1);
      out.ll.at(r, c) = 0.5 * ((a + b) + (d + e));
      out.lh.at(r, c) = 0.5 * ((a + b) - (d + e));
      out.hl.at(r, c) = 0.5 * ((a - b) + (d - e));
      out.hh.at(r, c) = 0.5 * ((a - b) - (d - e));
    }
  }
  return out;
}

std::array<GrayImage, kSubbandCount> haar_pyramid(const GrayImage& img) {
  std::array<GrayImage, kSubbandCount> bands;
  GrayImage current = img;
  for (std::size_t level = 1; level <= kWaveletLevels; ++level) {
    HaarLevel step = haar_step(current);
    // Level 1 details go last, level 3 details right after LL3.
    const std::size_t base = 1 + 3 * (kWaveletLevels - level);
    bands[base + 0] = std::move(step.lh);
    bands[base + 1] = std::move(step.hl);
    bands[base + 2] = std::move(step.hh);
    current = std::move(step.ll);
  }
  bands[0] = std::move(current);
  return bands;
}

WaveletFeatures wavelet_features(const GrayImage& patch) {
  if (patch.width() < kMinCellSide || patch.height() < kMinCellSide)
    fail(ErrorCode::InvalidArgument, "wavelet_features: patch " + std::to_string(patch.width()) + "x" +
                                         std::to_string(patch.height()) + " too small for " +
                                         std::to_string(kWaveletLevels) + " levels (need 16x16)");
  const auto bands = haar_pyramid(patch);
  WaveletFeatures f;
  for (std::size_t b = 0; b < kSubbandCount; ++b) {
    // Running mean: exact on constant bands.
    double mean = 0.0;
    std::size_t n = 0;
    for (double v : bands[b].pixels()) mean += (std::abs(v) - mean) / static_cast<double>(++n);
    f.energies[b] = mean;
    const MomentStats ms = moment_stats(bands[b].pixels());
    f.subband_stats[3 * b + 0] = ms.variance;
    f.subband_stats[3 * b + 1] = ms.skewness;
    f.subband_stats[3 * b + 2] = ms.kurtosis;
  }
  return f;
}

double wavelet_count(const WaveletFeatures& features, const Regressor& model) {
  return std::max(0.0, model.predict(features.energies, "wavelet"));
}

}  // namespace crowdcount
