#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "crowdcount/learn/matrix.hpp"

namespace crowdcount {

struct KMeansModel {
  Matrix centroids;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double inertia = 0.0;
  /// Sum of squared distances after every assignment step; non-increasing.
  std::vector<double> inertia_history;
};

/// k-means++ seeding followed by Lloyd iterations until the assignment stops changing or
/// max_iter updates have run. A cluster that empties is moved onto the point currently
/// farthest from its centroid.
KMeansModel kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iter = 100);

/// Index of the nearest centroid (squared Euclidean); ties resolve to the lowest index.
std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x);

}  // namespace crowdcount
