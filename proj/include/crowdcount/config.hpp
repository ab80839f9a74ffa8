#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdcount/fourier.hpp"
#include "crowdcount/head.hpp"
#include "crowdcount/interest.hpp"
#include "crowdcount/learn/svr.hpp"

namespace crowdcount {

struct CodebookConfig {
  std::size_t size = 300;              // K
  std::size_t max_descriptors = 20000;  // k-means sample cap
  std::size_t max_iter = 30;
  double rate_floor = kDefaultRateFloor;
};

struct HeadConfig {
  std::size_t window = 16;
  double threshold = -0.5;
  std::vector<double> scales{1.0, 1.5, 2.25};
  double nms_overlap = 0.3;
  std::size_t max_positives = 3000;
};

/// Everything that shapes a trained model. JSON keys mirror the field names; see
/// Config::to_json() for the canonical layout.
struct Config {
  std::size_t cell_size = 128;
  FourierParams fourier;
  int glcm_levels = 8;
  CodebookConfig codebook;
  SvrParams svr;
  HeadConfig head;
  /// Training-cell stride; 0 means cell_size / 2.
  std::size_t stride = 0;
  std::uint64_t seed = 0;

  std::size_t effective_stride() const noexcept { return stride == 0 ? cell_size / 2 : stride; }

  nlohmann::json to_json() const;
  /// Rejects unknown keys and out-of-range values with ErrorCode::Config. Missing keys keep defaults.
  static Config from_json(const nlohmann::json& j);
  static Config load(const std::string& path);

  /// Applies "dotted.key=value"; the value is parsed as JSON, falling back to a string.
  void set(std::string_view assignment);

  /// Hash of the canonical JSON with the seed removed (the seed does not change what
  /// a model computes at inference time).
  std::uint64_t hash() const;

  void validate() const;
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

}  // namespace crowdcount
