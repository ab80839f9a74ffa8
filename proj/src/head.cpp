#include "crowdcount/head.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "crowdcount/error.hpp"
#include "crowdcount/rng.hpp"

namespace crowdcount {

namespace {

// Normalization floor: keeps near-flat windows near zero instead of inflating noise.
constexpr double kNormFloor = 0.2;

// Per-cell orientation histograms for the whole image.
struct CellHistograms {
  std::size_t cells_x = 0;
  std::size_t cells_y = 0;
  std::vector<double> bins;  // (cells_y * cells_x) x 8

  std::span<const double> cell(std::size_t cy, std::size_t cx) const {
    return {bins.data() + (cy * cells_x + cx) * kHogOrientations, kHogOrientations};
  }
};

CellHistograms cell_histograms(const GrayImage& img) {
  CellHistograms h;
  h.cells_x = img.width() / kHogCellSize;
  h.cells_y = img.height() / kHogCellSize;
  h.bins.assign(h.cells_x * h.cells_y * kHogOrientations, 0.0);
  const std::size_t w = img.width(), ht = img.height();
  for (std::size_t r = 0; r < h.cells_y * kHogCellSize; ++r) {
    for (std::size_t c = 0; c < h.cells_x * kHogCellSize; ++c) {
      const double gx = img.at(r, std::min(c + 1, w - 1)) - img.at(r, c > 0 ? c - 1 : 0);
      const double gy = img.at(std::min(r + 1, ht - 1), c) - img.at(r > 0 ? r - 1 : 0, c);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double ang = std::atan2(gy, gx);
      if (ang < 0) ang += std::numbers::pi;
      if (ang >= std::numbers::pi) ang -= std::numbers::pi;
      // Linear interpolation between the two nearest orientation bins.
      const double pos = ang / std::numbers::pi * kHogOrientations - 0.5;
      const double lo = std::floor(pos);
      const double frac = pos - lo;
      const auto b0 = static_cast<std::size_t>((static_cast<long>(lo) + kHogOrientations) % kHogOrientations);
      const std::size_t b1 = (b0 + 1) % kHogOrientations;
      double* cell = h.bins.data() + ((r / kHogCellSize) * h.cells_x + c / kHogCellSize) * kHogOrientations;
      cell[b0] += mag * (1.0 - frac);
      cell[b1] += mag * frac;
    }
  }
  return h;
}

std::vector<double> gather_window(const CellHistograms& h, std::size_t cy, std::size_t cx, std::size_t span) {
  std::vector<double> f;
  f.reserve(span * span * kHogOrientations);
  for (std::size_t y = 0; y < span; ++y)
    for (std::size_t x = 0; x < span; ++x) {
      const auto cell = h.cell(cy + y, cx + x);
      f.insert(f.end(), cell.begin(), cell.end());
    }
  double norm = 0.0;
  for (double v : f) norm += v * v;
  norm = std::sqrt(norm + kNormFloor * kNormFloor);
  for (double& v : f) v /= norm;
  return f;
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

double HeadFilter::score(std::span<const double> features) const {
  require(features.size() == weights.size(), "HeadFilter::score: feature size mismatch");
  double s = bias;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * features[i];
  return s;
}

std::vector<double> window_features(const GrayImage& img, std::size_t window) {
  require(window >= kHogCellSize && window % kHogCellSize == 0, "window_features: window must be a multiple of 4");
  const GrayImage& src = (img.width() == window && img.height() == window) ? img : resize_bilinear(img, window, window);
  const auto h = cell_histograms(src);
  return gather_window(h, 0, 0, window / kHogCellSize);
}

HeadFilter train_head_filter(std::span<const GrayImage> heads, std::span<const GrayImage> background,
                             const HeadTrainParams& params) {
  if (heads.size() < 10 || background.size() < 10)
    fail(ErrorCode::InsufficientData, "train_head_filter: need >= 10 examples per class (got " +
                                          std::to_string(heads.size()) + " heads, " +
                                          std::to_string(background.size()) + " background)");
  std::vector<std::size_t> neg_idx(background.size());
  std::iota(neg_idx.begin(), neg_idx.end(), 0);
  const std::size_t neg_cap = params.max_negative_ratio * heads.size();
  if (neg_idx.size() > neg_cap) {
    Rng rng(params.seed);
    rng.shuffle(neg_idx.begin(), neg_idx.end());
    neg_idx.resize(neg_cap);
    std::sort(neg_idx.begin(), neg_idx.end());
  }

  std::vector<std::vector<double>> x;
  std::vector<double> label;
  for (const auto& img : heads) {
    x.push_back(window_features(img, params.window));
    label.push_back(1.0);
  }
  for (std::size_t i : neg_idx) {
    x.push_back(window_features(background[i], params.window));
    label.push_back(0.0);
  }

  // Class-balanced weights so the bias is not dominated by the larger set.
  const double w_pos = 0.5 / static_cast<double>(heads.size());
  const double w_neg = 0.5 / static_cast<double>(neg_idx.size());

  HeadFilter f;
  f.window = params.window;
  f.weights.assign(f.feature_size(), 0.0);
  std::vector<double> grad(f.weights.size());
  for (std::size_t it = 0; it < params.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double p = sigmoid(f.score(x[n]));
      const double err = (p - label[n]) * (label[n] > 0.5 ? w_pos : w_neg);
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += err * x[n][j];
      grad_b += err;
    }
    for (std::size_t j = 0; j < grad.size(); ++j)
      f.weights[j] -= params.step * (grad[j] + params.l2 * f.weights[j]);
    f.bias -= params.step * grad_b;
  }
  return f;
}

namespace {

// A coarser window wrapped around a kept detection sees the same head.
bool contains(const Detection& outer, const Detection& inner) {
  if (outer.scale <= inner.scale) return false;
  const double slack = (outer.scale - inner.scale) / 2.0;
  return std::abs(outer.x - inner.x) <= slack && std::abs(outer.y - inner.y) <= slack;
}

}  // namespace

double box_iou(const Detection& a, const Detection& b) {
  const double ax0 = a.x - a.scale / 2, ax1 = a.x + a.scale / 2, ay0 = a.y - a.scale / 2, ay1 = a.y + a.scale / 2;
  const double bx0 = b.x - b.scale / 2, bx1 = b.x + b.scale / 2, by0 = b.y - b.scale / 2, by1 = b.y + b.scale / 2;
  const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = iw * ih;
  const double uni = a.scale * a.scale + b.scale * b.scale - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<Detection> detect_heads(const GrayImage& patch, const HeadFilter& filter, const DetectParams& params) {
  require(filter.weights.size() == filter.feature_size(), "detect_heads: filter weights do not match window");
  std::vector<Detection> candidates;
  if (!(params.threshold < std::numeric_limits<double>::infinity())) return candidates;
  const std::size_t span = filter.window / kHogCellSize;

  for (double scale : params.scales) {
    require(scale > 0.0, "detect_heads: scales must be positive");
    const double side = static_cast<double>(filter.window) * scale;
    if (side > static_cast<double>(patch.width()) || side > static_cast<double>(patch.height())) continue;
    const auto sw = static_cast<std::size_t>(std::lround(static_cast<double>(patch.width()) / scale));
    const auto sh = static_cast<std::size_t>(std::lround(static_cast<double>(patch.height()) / scale));
    const GrayImage scaled = scale == 1.0 ? patch : resize_bilinear(patch, sw, sh);
    const auto hist = cell_histograms(scaled);
    if (hist.cells_x < span || hist.cells_y < span) continue;
    const double sx = static_cast<double>(patch.width()) / static_cast<double>(scaled.width());
    const double sy = static_cast<double>(patch.height()) / static_cast<double>(scaled.height());
    for (std::size_t cy = 0; cy + span <= hist.cells_y; ++cy) {
      for (std::size_t cx = 0; cx + span <= hist.cells_x; ++cx) {
        const auto features = gather_window(hist, cy, cx, span);
        // Flat windows carry no evidence either way.
        if (std::all_of(features.begin(), features.end(), [](double v) { return v == 0.0; })) continue;
        const double s = filter.score(features);
        if (s < params.threshold) continue;
        const double half = static_cast<double>(filter.window) / 2.0;
        // Rounding of the resampled size can push the box a fraction of a pixel outside.
        const double x = std::clamp((static_cast<double>(cx * kHogCellSize) + half) * sx, side / 2.0,
                                    static_cast<double>(patch.width()) - side / 2.0);
        const double y = std::clamp((static_cast<double>(cy * kHogCellSize) + half) * sy, side / 2.0,
                                    static_cast<double>(patch.height()) - side / 2.0);
        candidates.push_back(Detection{x, y, side, s});
      }
    }
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  std::vector<Detection> kept;
  for (const auto& d : candidates) {
    bool keep = true;
    for (const auto& k : kept)
      if (box_iou(d, k) > params.nms_overlap || contains(d, k)) {
        keep = false;
        break;
      }
    if (keep) kept.push_back(d);
  }
  return kept;
}

HeadSourceOutput head_stats(std::span<const Detection> detections) {
  HeadSourceOutput out;
  if (detections.empty()) return out;
  const auto n = static_cast<double>(detections.size());
  out.empty = false;
  out.eta_head = n;
  for (const auto& d : detections) {
    out.scale_mean += d.scale;
    out.conf_mean += d.confidence;
  }
  out.scale_mean /= n;
  out.conf_mean /= n;
  for (const auto& d : detections) {
    out.scale_var += (d.scale - out.scale_mean) * (d.scale - out.scale_mean);
    out.conf_var += (d.confidence - out.conf_mean) * (d.confidence - out.conf_mean);
  }
  out.scale_var /= n;
  out.conf_var /= n;
  return out;
}

}  // namespace crowdcount
