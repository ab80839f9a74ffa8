#include "crowdcount/learn/kmeans.hpp"

#include <limits>

#include "crowdcount/rng.hpp"

namespace crowdcount {

namespace {

// Four partial sums so the compiler can keep independent lanes busy.
double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n = a.size(), n4 = n - n % 4;
  std::size_t i = 0;
  for (; i < n4; i += 4) {
    const double d0 = a[i] - b[i], d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2], d3 = a[i + 3] - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

std::size_t nearest(const Matrix& centroids, std::span<const double> x, double& best) {
  best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(x, centroids.row(c));
    if (d < best) {
      best = d;
      arg = c;
    }
  }
  return arg;
}

// Returns inertia; fills labels and per-point squared distances.
double assign(const Matrix& points, const Matrix& centroids, std::vector<std::size_t>& labels,
              std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best;
    labels[i] = nearest(centroids, points.row(i), best);
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

}  // namespace

std::size_t nearest_centroid(const Matrix& centroids, std::span<const double> x) {
  require(!centroids.empty(), "nearest_centroid: no centroids");
  require(x.size() == centroids.cols(), "nearest_centroid: dimension mismatch");
  double best;
  return nearest(centroids, x, best);
}

KMeansModel kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  require(k >= 1, "kmeans: k must be >= 1");
  if (k > points.rows())
    fail(ErrorCode::InsufficientData, "kmeans: k = " + std::to_string(k) + " exceeds " +
                                          std::to_string(points.rows()) + " points");
  const std::size_t n = points.rows(), d = points.cols();
  Rng rng(seed);

  // k-means++ seeding.
  Matrix centroids(k, d);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::size_t pick = rng.index(n);
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double v : dist) total += v;
      if (total > 0.0) {
        double target = rng.uniform() * total;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          target -= dist[i];
          if (target < 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        pick = rng.index(n);
      }
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i)
      dist[i] = std::min(dist[i], squared_distance(points.row(i), centroids.row(c)));
  }

  KMeansModel model;
  model.seed = seed;
  std::vector<std::size_t> labels(n, 0), next(n, 0);
  model.inertia = assign(points, centroids, labels, dist);
  model.inertia_history.push_back(model.inertia);

  std::vector<std::size_t> sizes(k);
  for (std::size_t it = 0; it < max_iter; ++it) {
    Matrix sums(k, d);
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++sizes[labels[i]];
      auto acc = sums.row(labels[i]);
      const auto p = points.row(i);
      for (std::size_t j = 0; j < d; ++j) acc[j] += p[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;
      auto dst = centroids.row(c);
      const auto src = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] / static_cast<double>(sizes[c]);
    }
    // Distances to the updated centroids, for the farthest-point reseed.
    for (std::size_t i = 0; i < n; ++i)
      dist[i] = squared_distance(points.row(i), centroids.row(labels[i]));
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i)
        if (dist[i] > dist[far]) far = i;
      std::copy(points.row(far).begin(), points.row(far).end(), centroids.row(c).begin());
      dist[far] = 0.0;
    }

    model.inertia = assign(points, centroids, next, dist);
    model.inertia_history.push_back(model.inertia);
    model.iterations = it + 1;
    const bool changed = next != labels;
    labels.swap(next);
    if (!changed) break;
  }
  model.centroids = std::move(centroids);
  return model;
}

}  // namespace crowdcount
