#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "crowdcount/learn/matrix.hpp"

namespace crowdcount {

enum class KernelType { Linear, Rbf };

struct Kernel {
  KernelType type = KernelType::Rbf;
  /// RBF width; a non-positive value means 1 / input dimension at fit time.
  double gamma = 0.0;

  double operator()(std::span<const double> a, std::span<const double> b) const;
  bool operator==(const Kernel&) const = default;
};

struct SvrParams {
  Kernel kernel;
  double C = 10.0;
  double epsilon = 0.5;
  /// Stop when the maximal KKT violation (gradient gap of the dual) drops below tol.
  double tol = 1e-4;
  std::size_t max_iter = 2'000'000;
  /// Kernel row cache budget.
  std::size_t cache_mb = 256;
};

/// f(x) = sum_i coef_i k(sv_i, x) + bias.
struct SvrModel {
  Kernel kernel;
  double C = 0.0;
  double epsilon = 0.0;
  double tol = 0.0;
  std::size_t dim = 0;
  Matrix support_vectors;
  std::vector<double> coefficients;  // alpha_i - alpha_i^*, each in [-C, C]
  double bias = 0.0;
  bool converged = true;
  std::size_t iterations = 0;

  bool operator==(const SvrModel&) const = default;
};

/// Solves the epsilon-SVR dual
///   min 1/2 (a - a*)^T K (a - a*) + eps sum (a + a*) - sum y (a - a*)
///   s.t. sum (a - a*) = 0, 0 <= a, a* <= C
/// with two-variable (SMO) updates and second-order working-set selection. The solver is
/// deterministic; `seed` is accepted for interface symmetry with the other trainers and
/// does not influence the schedule. When max_iter is hit the best iterate is returned
/// with converged = false.
SvrModel svr_fit(const Matrix& X, std::span<const double> y, const SvrParams& params,
                 std::uint64_t seed = 0);

double svr_predict(const SvrModel& model, std::span<const double> x);

}  // namespace crowdcount
