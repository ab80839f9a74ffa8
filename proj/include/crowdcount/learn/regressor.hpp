#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "crowdcount/learn/standardize.hpp"
#include "crowdcount/learn/svr.hpp"

namespace crowdcount {

/// SVR trained on z-scored inputs and a z-scored target. The tube width is given in
/// target units and rescaled for the solver.
struct Regressor {
  Standardizer inputs;
  double target_mean = 0.0;
  double target_scale = 1.0;
  SvrModel svr;

  std::size_t dim() const noexcept { return inputs.dim(); }

  /// Prediction in target units, unclamped. A dimension mismatch raises
  /// ErrorCode::ModelIncompatible naming `source`.
  double predict(std::span<const double> x, std::string_view source = "regressor") const;

  bool operator==(const Regressor&) const = default;
};

Regressor fit_regressor(const Matrix& X, std::span<const double> y, const SvrParams& params,
                        std::uint64_t seed = 0);

}  // namespace crowdcount
