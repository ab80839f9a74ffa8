#include "crowdcount/glcm.hpp"

#include <algorithm>
#include <cmath>

#include "crowdcount/error.hpp"
#include "crowdcount/learn/regressor.hpp"

namespace crowdcount {

std::array<double, GlcmFeatures::kFeatureCount> GlcmFeatures::features() const {
  std::array<double, kFeatureCount> out{};
  for (std::size_t t = 0; t < 4; ++t) {
    out[4 * t + 0] = directions[t].dissimilarity;
    out[4 * t + 1] = directions[t].homogeneity;
    out[4 * t + 2] = directions[t].energy;
    out[4 * t + 3] = directions[t].entropy;
  }
  return out;
}

std::array<double, GlcmFeatures::kStatsCount> GlcmFeatures::stats() const {
  std::array<double, kStatsCount> out{};
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t s = 0; s < 3; ++s) out[3 * t + s] = matrix_stats[t][s];
  return out;
}

LevelGrid quantize(const GrayImage& img, int levels) {
  require(levels >= 2, "quantize: levels must be >= 2");
  LevelGrid grid{img.width(), img.height(), std::vector<int>(img.size())};
  const double top = static_cast<double>(levels - 1);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::clamp(img.pixels()[i], 0.0, 1.0);
    grid.levels[i] = static_cast<int>(std::min(top, std::floor(v * levels)));
  }
  return grid;
}

std::vector<double> cooccurrence(const LevelGrid& grid, int levels, GlcmOffset offset) {
  const auto L = static_cast<std::size_t>(levels);
  std::vector<double> m(L * L, 0.0);
  const long h = static_cast<long>(grid.height), w = static_cast<long>(grid.width);
  std::size_t pairs = 0;
  const long r0 = std::max(0L, -static_cast<long>(offset.drow));
  const long r1 = std::min(h, h - offset.drow);
  const long c0 = std::max(0L, -static_cast<long>(offset.dcol));
  const long c1 = std::min(w, w - offset.dcol);
  for (long r = r0; r < r1; ++r) {
    for (long c = c0; c < c1; ++c) {
      const int i = grid.levels[static_cast<std::size_t>(r * w + c)];
      const int j = grid.levels[static_cast<std::size_t>((r + offset.drow) * w + (c + offset.dcol))];
      m[static_cast<std::size_t>(i) * L + static_cast<std::size_t>(j)] += 1.0;
      ++pairs;
    }
  }
  if (pairs > 0)
    for (double& v : m) v /= static_cast<double>(pairs);
  return m;
}

GlcmFeatures glcm_features(const LevelGrid& grid, int levels) {
  require(levels >= 2, "glcm_features: levels must be >= 2");
  require(grid.width >= 2 && grid.height >= 2, "glcm_features: grid must be at least 2x2");
  require(grid.levels.size() == grid.width * grid.height, "glcm_features: grid size mismatch");
  for (int v : grid.levels) require(v >= 0 && v < levels, "glcm_features: level out of range");

  const auto L = static_cast<std::size_t>(levels);
  GlcmFeatures out;
  for (std::size_t t = 0; t < kGlcmOffsets.size(); ++t) {
    const auto m = cooccurrence(grid, levels, kGlcmOffsets[t]);
    auto& f = out.directions[t];
    double total = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) {
        const double p = m[i * L + j];
        total += p;
        if (p == 0.0) continue;
        const double d = static_cast<double>(i) - static_cast<double>(j);
        f.dissimilarity += p * std::abs(d);
        f.homogeneity += p / (1.0 + d * d);
        f.energy += p * p;
        f.entropy -= p * std::log(p);
      }
    }
    if (total == 0.0) {
      f = GlcmDirectionFeatures{};
      f.degenerate = true;
      continue;
    }
    const MomentStats ms = moment_stats(m);
    out.matrix_stats[t] = {ms.variance, ms.skewness, ms.kurtosis};
  }
  return out;
}

double glcm_count(const GlcmFeatures& features, const Regressor& model) {
  const auto x = features.features();
  return std::max(0.0, model.predict(x, "glcm"));
}

}  // namespace crowdcount
