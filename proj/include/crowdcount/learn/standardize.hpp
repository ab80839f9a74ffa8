#pragma once

#include <span>
#include <vector>

#include "crowdcount/learn/matrix.hpp"

namespace crowdcount {

/// Per-dimension z-scoring. Dimensions with zero variance get unit scale.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  std::size_t dim() const noexcept { return mean.size(); }

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> inverse(std::span<const double> z) const;
  Matrix apply(const Matrix& rows) const;

  bool operator==(const Standardizer&) const = default;
};

Standardizer standardize_fit(const Matrix& rows);

}  // namespace crowdcount
