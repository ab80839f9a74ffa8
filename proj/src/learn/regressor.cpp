#include "crowdcount/learn/regressor.hpp"

#include <cmath>
#include <string>

namespace crowdcount {

double Regressor::predict(std::span<const double> x, std::string_view source) const {
  if (x.size() != inputs.dim() || svr.dim != inputs.dim())
    fail(ErrorCode::ModelIncompatible, std::string(source) + ": model expects " +
                                           std::to_string(inputs.dim()) + " features, got " +
                                           std::to_string(x.size()));
  const auto z = inputs.apply(x);
  return svr_predict(svr, z) * target_scale + target_mean;
}

Regressor fit_regressor(const Matrix& X, std::span<const double> y, const SvrParams& params,
                        std::uint64_t seed) {
  require(X.rows() == y.size(), "fit_regressor: |X| != |y|");
  require(X.rows() >= 2, "fit_regressor: need at least 2 samples");
  Regressor r;
  r.inputs = standardize_fit(X);

  const auto n = static_cast<double>(y.size());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  r.target_mean = mean;
  r.target_scale = sd > 1e-12 ? sd : 1.0;

  std::vector<double> z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) z[i] = (y[i] - mean) / r.target_scale;
  SvrParams scaled = params;
  scaled.epsilon = params.epsilon / r.target_scale;
  r.svr = svr_fit(r.inputs.apply(X), z, scaled, seed);
  return r;
}

}  // namespace crowdcount
