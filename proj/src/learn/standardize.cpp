#include "crowdcount/learn/standardize.hpp"

#include <algorithm>
#include <cmath>

namespace crowdcount {

Standardizer standardize_fit(const Matrix& rows) {
  require(!rows.empty(), "standardize_fit: no rows");
  const std::size_t d = rows.cols();
  const auto n = static_cast<double>(rows.rows());
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  for (std::size_t i = 0; i < rows.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += rows.at(i, j);
  for (double& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < rows.rows(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = rows.at(i, j) - s.mean[j];
      var[j] += dev * dev;
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    // Treat round-off level spread as constant.
    s.scale[j] = sd > 1e-12 * std::max(1.0, std::abs(s.mean[j])) ? sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  require(x.size() == mean.size(), "Standardizer::apply: dimension mismatch");
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / scale[j];
  return z;
}

std::vector<double> Standardizer::inverse(std::span<const double> z) const {
  require(z.size() == mean.size(), "Standardizer::inverse: dimension mismatch");
  std::vector<double> x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * scale[j] + mean[j];
  return x;
}

Matrix Standardizer::apply(const Matrix& rows) const {
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto z = apply(rows.row(i));
    std::copy(z.begin(), z.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace crowdcount
