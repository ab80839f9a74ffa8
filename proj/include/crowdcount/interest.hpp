#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "crowdcount/imaging.hpp"
#include "crowdcount/learn/matrix.hpp"

namespace crowdcount {

struct Regressor;

inline constexpr std::size_t kDescriptorSize = 128;  // 4 x 4 spatial bins x 8 orientations
inline constexpr int kDescriptorVersion = 1;

struct DescriptorParams {
  int octaves = 3;
  int intervals = 3;
  double base_sigma = 1.0;
  /// Minimum |DoG| response at the extremum (intensity units).
  double contrast_threshold = 0.01;
  /// Principal-curvature ratio above which edge-like extrema are dropped.
  double edge_ratio = 10.0;
};

struct Descriptor {
  double x = 0.0;  // column, patch coordinates
  double y = 0.0;  // row
  double scale = 0.0;
  double orientation = 0.0;  // radians
  /// L2-normalized (or all zero when the neighbourhood has no gradient).
  std::array<double, kDescriptorSize> vector{};
};

/// Difference-of-Gaussians extrema with an orientation-histogram descriptor.
std::vector<Descriptor> extract_descriptors(const GrayImage& patch, const DescriptorParams& params = {});

struct Codebook {
  Matrix centroids;  // K x 128
  std::size_t size() const noexcept { return centroids.rows(); }
};

Codebook build_codebook(std::span<const Descriptor> descriptors, std::size_t k, std::uint64_t seed,
                        std::size_t max_iter = 30);

struct WordHistogram {
  std::vector<std::uint32_t> counts;
  std::size_t total() const noexcept;
};

/// Hard assignment to the nearest centroid; ties go to the lowest index.
WordHistogram word_histogram(std::span<const Descriptor> descriptors, const Codebook& codebook);

struct PoissonRates {
  std::vector<double> lambda_plus;   // crowd cells
  std::vector<double> lambda_minus;  // non-crowd cells
};

inline constexpr double kDefaultRateFloor = 0.01;

/// Log-likelihood ratio of the crowd and non-crowd Poisson word models:
///   sum_i [lambda_i^- - lambda_i^+ + k_i (log lambda_i^+ - log lambda_i^-)].
double crowd_confidence(const WordHistogram& hist, const PoissonRates& rates);

/// Per-word sample means for each class, floored at `rate_floor`.
PoissonRates estimate_rates(std::span<const WordHistogram> cells, std::span<const bool> is_crowd,
                            double rate_floor = kDefaultRateFloor);

/// SVR estimate on the K word counts, clamped at zero.
double interest_count(const WordHistogram& hist, const Regressor& model);

}  // namespace crowdcount
