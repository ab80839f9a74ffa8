#include "crowdcount/interest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "crowdcount/error.hpp"
#include "crowdcount/learn/kmeans.hpp"
#include "crowdcount/learn/regressor.hpp"

namespace crowdcount {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kOrientationBins = 36;
constexpr int kSpatialBins = 4;
constexpr int kAngleBins = 8;
constexpr double kDescriptorClip = 0.2;

GrayImage downsample2(const GrayImage& img) {
  GrayImage out((img.width() + 1) / 2, (img.height() + 1) / 2);
  for (std::size_t r = 0; r < out.height(); ++r)
    for (std::size_t c = 0; c < out.width(); ++c) out.at(r, c) = img.at(2 * r, 2 * c);
  return out;
}

GrayImage subtract(const GrayImage& a, const GrayImage& b) {
  GrayImage out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.pixels()[i] = a.pixels()[i] - b.pixels()[i];
  return out;
}

bool is_extremum(const std::vector<GrayImage>& dog, std::size_t layer, std::size_t r, std::size_t c) {
  const double v = dog[layer].at(r, c);
  const bool want_max = v > 0;
  for (std::size_t l = layer - 1; l <= layer + 1; ++l)
    for (std::size_t rr = r - 1; rr <= r + 1; ++rr)
      for (std::size_t cc = c - 1; cc <= c + 1; ++cc) {
        if (l == layer && rr == r && cc == c) continue;
        const double n = dog[l].at(rr, cc);
        if (want_max ? !(v > n) : !(v < n)) return false;
      }
  return true;
}

// Parabolic vertex offset in [-0.5, 0.5] from three samples.
double vertex_offset(double left, double mid, double right) {
  const double denom = left - 2.0 * mid + right;
  if (denom == 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

double dominant_orientation(const GrayImage& g, std::size_t r, std::size_t c, double sigma) {
  const double win_sigma = 1.5 * sigma;
  const long radius = std::lround(3.0 * win_sigma);
  std::array<double, kOrientationBins> hist{};
  const long h = static_cast<long>(g.height()), w = static_cast<long>(g.width());
  for (long dy = -radius; dy <= radius; ++dy) {
    const long y = static_cast<long>(r) + dy;
    if (y <= 0 || y >= h - 1) continue;
    for (long dx = -radius; dx <= radius; ++dx) {
      const long x = static_cast<long>(c) + dx;
      if (x <= 0 || x >= w - 1) continue;
      const auto ys = static_cast<std::size_t>(y), xs = static_cast<std::size_t>(x);
      const double gx = g.at(ys, xs + 1) - g.at(ys, xs - 1);
      const double gy = g.at(ys + 1, xs) - g.at(ys - 1, xs);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx);
      if (ang < 0) ang += kTwoPi;
      const double weight = std::exp(-static_cast<double>(dx * dx + dy * dy) / (2.0 * win_sigma * win_sigma));
      const int bin = std::min(kOrientationBins - 1, static_cast<int>(ang / kTwoPi * kOrientationBins));
      hist[static_cast<std::size_t>(bin)] += weight * mag;
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kOrientationBins> smooth{};
    for (int b = 0; b < kOrientationBins; ++b) {
      const auto prev = static_cast<std::size_t>((b + kOrientationBins - 1) % kOrientationBins);
      const auto next = static_cast<std::size_t>((b + 1) % kOrientationBins);
      smooth[static_cast<std::size_t>(b)] = 0.25 * hist[prev] + 0.5 * hist[static_cast<std::size_t>(b)] + 0.25 * hist[next];
    }
    hist = smooth;
  }
  const auto best = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  const double left = hist[static_cast<std::size_t>((best + kOrientationBins - 1) % kOrientationBins)];
  const double right = hist[static_cast<std::size_t>((best + 1) % kOrientationBins)];
  const double bin = best + 0.5 + vertex_offset(left, hist[static_cast<std::size_t>(best)], right);
  double ang = bin * kTwoPi / kOrientationBins;
  if (ang >= kTwoPi) ang -= kTwoPi;
  return ang;
}

std::array<double, kDescriptorSize> describe(const GrayImage& g, double row, double col, double sigma,
                                             double orientation) {
  std::array<double, kDescriptorSize> desc{};
  const double bin_width = 3.0 * sigma;
  const long radius = std::lround(bin_width * std::sqrt(2.0) * (kSpatialBins + 1) * 0.5);
  const double cos_t = std::cos(orientation), sin_t = std::sin(orientation);
  const long r0 = std::lround(row), c0 = std::lround(col);
  const long h = static_cast<long>(g.height()), w = static_cast<long>(g.width());

  for (long dy = -radius; dy <= radius; ++dy) {
    const long y = r0 + dy;
    if (y <= 0 || y >= h - 1) continue;
    for (long dx = -radius; dx <= radius; ++dx) {
      const long x = c0 + dx;
      if (x <= 0 || x >= w - 1) continue;
      const double ox = static_cast<double>(x) - col, oy = static_cast<double>(y) - row;
      const double rx = (cos_t * ox + sin_t * oy) / bin_width;
      const double ry = (-sin_t * ox + cos_t * oy) / bin_width;
      const double rbin = ry + kSpatialBins / 2.0 - 0.5;
      const double cbin = rx + kSpatialBins / 2.0 - 0.5;
      if (rbin <= -1.0 || rbin >= kSpatialBins || cbin <= -1.0 || cbin >= kSpatialBins) continue;

      const auto ys = static_cast<std::size_t>(y), xs = static_cast<std::size_t>(x);
      const double gx = g.at(ys, xs + 1) - g.at(ys, xs - 1);
      const double gy = g.at(ys + 1, xs) - g.at(ys - 1, xs);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx) - orientation;
      while (ang < 0) ang += kTwoPi;
      while (ang >= kTwoPi) ang -= kTwoPi;
      const double obin = ang / kTwoPi * kAngleBins;
      const double weight = std::exp(-(rx * rx + ry * ry) / (2.0 * 2.0 * 2.0)) * mag;

      // Trilinear distribution over (row bin, column bin, angle bin).
      const double rf = std::floor(rbin), cf = std::floor(cbin), of = std::floor(obin);
      const double dr = rbin - rf, dc = cbin - cf, dor = obin - of;
      for (int i = 0; i < 2; ++i) {
        const int rb = static_cast<int>(rf) + i;
        if (rb < 0 || rb >= kSpatialBins) continue;
        const double wr = weight * (i == 0 ? 1.0 - dr : dr);
        for (int j = 0; j < 2; ++j) {
          const int cb = static_cast<int>(cf) + j;
          if (cb < 0 || cb >= kSpatialBins) continue;
          const double wc = wr * (j == 0 ? 1.0 - dc : dc);
          for (int k = 0; k < 2; ++k) {
            const int ob = (static_cast<int>(of) + k) % kAngleBins;
            const double wo = wc * (k == 0 ? 1.0 - dor : dor);
            desc[static_cast<std::size_t>((rb * kSpatialBins + cb) * kAngleBins + ob)] += wo;
          }
        }
      }
    }
  }

  auto normalize = [&desc]() {
    double norm = 0.0;
    for (double v : desc) norm += v * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) return false;
    for (double& v : desc) v /= norm;
    return true;
  };
  if (!normalize()) return desc;
  for (double& v : desc) v = std::min(v, kDescriptorClip);
  normalize();
  return desc;
}

}  // namespace

std::vector<Descriptor> extract_descriptors(const GrayImage& patch, const DescriptorParams& params) {
  require(patch.width() >= kMinCellSide && patch.height() >= kMinCellSide,
          "extract_descriptors: patch must be at least 16x16");
  require(params.octaves >= 1 && params.intervals >= 1 && params.base_sigma > 0.5,
          "extract_descriptors: invalid parameters");

  const int s = params.intervals;
  const double k = std::pow(2.0, 1.0 / s);
  const double edge_limit = (params.edge_ratio + 1.0) * (params.edge_ratio + 1.0) / params.edge_ratio;
  constexpr double kAssumedBlur = 0.5;

  std::vector<Descriptor> out;
  GrayImage base = gaussian_blur(patch, std::sqrt(params.base_sigma * params.base_sigma - kAssumedBlur * kAssumedBlur));
  for (int octave = 0; octave < params.octaves; ++octave) {
    if (base.width() < 8 || base.height() < 8) break;
    const double octave_scale = std::pow(2.0, octave);

    std::vector<GrayImage> gauss;
    gauss.reserve(static_cast<std::size_t>(s + 3));
    gauss.push_back(base);
    for (int i = 1; i < s + 3; ++i) {
      const double prev = params.base_sigma * std::pow(k, i - 1);
      const double cur = prev * k;
      gauss.push_back(gaussian_blur(gauss.back(), std::sqrt(cur * cur - prev * prev)));
    }
    std::vector<GrayImage> dog;
    for (int i = 0; i + 1 < s + 3; ++i)
      dog.push_back(subtract(gauss[static_cast<std::size_t>(i + 1)], gauss[static_cast<std::size_t>(i)]));

    const std::size_t h = base.height(), w = base.width();
    for (int layer = 1; layer <= s; ++layer) {
      const auto L = static_cast<std::size_t>(layer);
      const GrayImage& d = dog[L];
      for (std::size_t r = 1; r + 1 < h; ++r) {
        for (std::size_t c = 1; c + 1 < w; ++c) {
          const double v = d.at(r, c);
          if (std::abs(v) < params.contrast_threshold) continue;
          if (!is_extremum(dog, L, r, c)) continue;

          const double dxx = d.at(r, c + 1) + d.at(r, c - 1) - 2.0 * v;
          const double dyy = d.at(r + 1, c) + d.at(r - 1, c) - 2.0 * v;
          const double dxy = 0.25 * (d.at(r + 1, c + 1) - d.at(r + 1, c - 1) - d.at(r - 1, c + 1) + d.at(r - 1, c - 1));
          const double tr = dxx + dyy, det = dxx * dyy - dxy * dxy;
          if (det <= 0.0 || tr * tr / det >= edge_limit) continue;

          const double oc = vertex_offset(d.at(r, c - 1), v, d.at(r, c + 1));
          const double orow = vertex_offset(d.at(r - 1, c), v, d.at(r + 1, c));
          const double sigma = params.base_sigma * std::pow(k, layer);
          const GrayImage& g = gauss[L];

          Descriptor desc;
          desc.x = (static_cast<double>(c) + oc) * octave_scale;
          desc.y = (static_cast<double>(r) + orow) * octave_scale;
          desc.scale = sigma * octave_scale;
          desc.orientation = dominant_orientation(g, r, c, sigma);
          desc.vector = describe(g, static_cast<double>(r) + orow, static_cast<double>(c) + oc, sigma,
                                 desc.orientation);
          out.push_back(desc);
        }
      }
    }
    base = downsample2(gauss[static_cast<std::size_t>(s)]);
  }
  return out;
}

Codebook build_codebook(std::span<const Descriptor> descriptors, std::size_t k, std::uint64_t seed,
                        std::size_t max_iter) {
  if (descriptors.size() < k)
    fail(ErrorCode::InsufficientData, "build_codebook: " + std::to_string(descriptors.size()) +
                                          " descriptors for a codebook of size " + std::to_string(k));
  Matrix points(0, kDescriptorSize);
  for (const auto& d : descriptors) points.push_row(d.vector);
  return Codebook{kmeans(points, k, seed, max_iter).centroids};
}

std::size_t WordHistogram::total() const noexcept {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

WordHistogram word_histogram(std::span<const Descriptor> descriptors, const Codebook& codebook) {
  require(codebook.size() > 0, "word_histogram: empty codebook");
  WordHistogram h{std::vector<std::uint32_t>(codebook.size(), 0)};
  for (const auto& d : descriptors) ++h.counts[nearest_centroid(codebook.centroids, d.vector)];
  return h;
}

double crowd_confidence(const WordHistogram& hist, const PoissonRates& rates) {
  const std::size_t K = hist.counts.size();
  if (rates.lambda_plus.size() != K || rates.lambda_minus.size() != K)
    fail(ErrorCode::ModelIncompatible, "crowd_confidence: histogram has " + std::to_string(K) +
                                           " words, rates have " + std::to_string(rates.lambda_plus.size()));
  double mu = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    const double lp = rates.lambda_plus[i], lm = rates.lambda_minus[i];
    if (!(lp > 0.0) || !(lm > 0.0))
      fail(ErrorCode::InvalidArgument, "crowd_confidence: non-positive rate for word " + std::to_string(i));
    mu += lm - lp + static_cast<double>(hist.counts[i]) * (std::log(lp) - std::log(lm));
  }
  return mu;
}

PoissonRates estimate_rates(std::span<const WordHistogram> cells, std::span<const bool> is_crowd,
                            double rate_floor) {
  require(cells.size() == is_crowd.size(), "estimate_rates: label count mismatch");
  require(rate_floor > 0.0, "estimate_rates: rate floor must be positive");
  require(!cells.empty(), "estimate_rates: no cells");
  const std::size_t K = cells.front().counts.size();
  std::vector<double> sum_plus(K, 0.0), sum_minus(K, 0.0);
  std::size_t n_plus = 0, n_minus = 0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    require(cells[c].counts.size() == K, "estimate_rates: histogram size mismatch");
    auto& sum = is_crowd[c] ? sum_plus : sum_minus;
    (is_crowd[c] ? n_plus : n_minus) += 1;
    for (std::size_t i = 0; i < K; ++i) sum[i] += cells[c].counts[i];
  }
  if (n_plus == 0 || n_minus == 0)
    fail(ErrorCode::InsufficientData, std::string("estimate_rates: no ") +
                                          (n_plus == 0 ? "crowd" : "non-crowd") + " cells in training data");
  PoissonRates rates{std::vector<double>(K), std::vector<double>(K)};
  for (std::size_t i = 0; i < K; ++i) {
    rates.lambda_plus[i] = std::max(rate_floor, sum_plus[i] / static_cast<double>(n_plus));
    rates.lambda_minus[i] = std::max(rate_floor, sum_minus[i] / static_cast<double>(n_minus));
  }
  return rates;
}

double interest_count(const WordHistogram& hist, const Regressor& model) {
  std::vector<double> x(hist.counts.begin(), hist.counts.end());
  return std::max(0.0, model.predict(x, "interest"));
}

}  // namespace crowdcount
