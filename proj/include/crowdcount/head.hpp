#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "crowdcount/imaging.hpp"

namespace crowdcount {

inline constexpr std::size_t kHogCellSize = 4;
inline constexpr std::size_t kHogOrientations = 8;

/// Linear scorer over the gradient-orientation histogram of a square window.
struct HeadFilter {
  std::size_t window = 16;
  std::vector<double> weights;  // (window/4)^2 cells x 8 orientations
  double bias = 0.0;

  std::size_t feature_size() const noexcept {
    const std::size_t cells = window / kHogCellSize;
    return cells * cells * kHogOrientations;
  }
  double score(std::span<const double> features) const;

  bool operator==(const HeadFilter&) const = default;
};

struct HeadTrainParams {
  std::size_t window = 16;
  double l2 = 1e-3;
  std::size_t iterations = 400;
  double step = 1.0;
  /// Negatives beyond this multiple of the positives are subsampled with the seed.
  std::size_t max_negative_ratio = 4;
  std::uint64_t seed = 0;
};

struct Detection {
  double x = 0.0;  // window centre, patch coordinates
  double y = 0.0;
  double scale = 0.0;  // window side in pixels
  double confidence = 0.0;

  bool operator==(const Detection&) const = default;
};

struct DetectParams {
  double threshold = -0.5;
  std::vector<double> scales{1.0, 1.5, 2.25};
  double nms_overlap = 0.3;
};

struct HeadSourceOutput {
  double eta_head = 0.0;
  double scale_mean = 0.0;
  double scale_var = 0.0;
  double conf_mean = 0.0;
  double conf_var = 0.0;
  bool empty = true;
};

/// Unsigned-orientation histograms over 4x4 pixel cells, L2 normalized over the window.
/// The image is resampled to window x window first when needed.
std::vector<double> window_features(const GrayImage& img, std::size_t window);

/// L2-regularized logistic regression trained by full-batch gradient descent.
HeadFilter train_head_filter(std::span<const GrayImage> heads, std::span<const GrayImage> background,
                             const HeadTrainParams& params = {});

/// Multi-scale sliding window (stride = window/4 at each scale), thresholding, and greedy
/// non-maximum suppression at the given IoU. A window that encloses an already kept,
/// smaller detection is suppressed as well. Windows without any gradient are never scored.
std::vector<Detection> detect_heads(const GrayImage& patch, const HeadFilter& filter, const DetectParams& params = {});

double box_iou(const Detection& a, const Detection& b);

/// Population means and variances over detections; zeros and empty = true when none.
HeadSourceOutput head_stats(std::span<const Detection> detections);

}  // namespace crowdcount
