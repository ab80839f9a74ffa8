#include "crowdcount/learn/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

namespace crowdcount {

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
  if (type == KernelType::Linear) {
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot;
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

namespace {

constexpr double kTau = 1e-12;

// LRU cache of kernel-matrix rows over the training points.
class KernelRows {
 public:
  KernelRows(const Matrix& X, const Kernel& kernel, std::size_t cache_mb)
      : X_(X), kernel_(kernel) {
    const std::size_t row_bytes = std::max<std::size_t>(1, X.rows() * sizeof(double));
    capacity_ = std::max<std::size_t>(2, cache_mb * (std::size_t{1} << 20) / row_bytes);
    diag_.resize(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) diag_[i] = kernel_(X.row(i), X.row(i));
  }

  double diag(std::size_t i) const { return diag_[i]; }

  const std::vector<double>& row(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      return it->second->second;
    }
    if (index_.size() >= capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
    std::vector<double> values(X_.rows());
    for (std::size_t j = 0; j < X_.rows(); ++j) values[j] = kernel_(X_.row(i), X_.row(j));
    lru_.emplace_front(i, std::move(values));
    index_[i] = lru_.begin();
    return lru_.front().second;
  }

 private:
  using Entry = std::pair<std::size_t, std::vector<double>>;
  const Matrix& X_;
  Kernel kernel_;
  std::size_t capacity_ = 0;
  std::vector<double> diag_;
  std::list<Entry> lru_;
  std::unordered_map<std::size_t, std::list<Entry>::iterator> index_;
};

}  // namespace

SvrModel svr_fit(const Matrix& X, std::span<const double> y, const SvrParams& params,
                 std::uint64_t /*seed*/) {
  const std::size_t n = X.rows();
  require(n >= 2, "svr_fit: need at least 2 samples");
  require(y.size() == n, "svr_fit: |X| != |y|");
  require(params.C > 0.0 && params.epsilon >= 0.0 && params.tol > 0.0, "svr_fit: invalid hyperparameters");
  for (double v : X.data()) require(std::isfinite(v), "svr_fit: non-finite feature");
  for (double v : y) require(std::isfinite(v), "svr_fit: non-finite target");

  Kernel kernel = params.kernel;
  if (kernel.type == KernelType::Rbf && kernel.gamma <= 0.0)
    kernel.gamma = 1.0 / static_cast<double>(std::max<std::size_t>(1, X.cols()));

  const double C = params.C;
  const std::size_t l = 2 * n;
  // Variables t < n are alpha_t (sign +1), t >= n are alpha*_{t-n} (sign -1).
  std::vector<double> alpha(l, 0.0), grad(l);
  std::vector<signed char> sign(l);
  for (std::size_t t = 0; t < n; ++t) {
    sign[t] = 1;
    sign[t + n] = -1;
    grad[t] = params.epsilon - y[t];
    grad[t + n] = params.epsilon + y[t];
  }
  KernelRows rows(X, kernel, params.cache_mb);
  auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  bool converged = false;
  std::size_t iter = 0;
  for (; iter < params.max_iter; ++iter) {
    // First index: maximal violating gradient among those that can move up.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = l;
    for (std::size_t t = 0; t < l; ++t) {
      if (sign[t] == 1) {
        if (!upper(t) && -grad[t] >= gmax) { gmax = -grad[t]; i = t; }
      } else {
        if (!lower(t) && grad[t] >= gmax) { gmax = grad[t]; i = t; }
      }
    }
    if (i == l) { converged = true; break; }

    const std::vector<double>& ki = rows.row(i % n);
    const double qd_i = rows.diag(i % n);
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = l;
    for (std::size_t t = 0; t < l; ++t) {
      const double q_it = sign[i] * sign[t] * ki[t % n];
      const double qd_t = rows.diag(t % n);
      if (sign[t] == 1) {
        if (lower(t)) continue;
        const double diff = gmax + grad[t];
        gmax2 = std::max(gmax2, grad[t]);
        if (diff > 0) {
          const double quad = qd_i + qd_t - 2.0 * sign[i] * q_it;
          const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
          if (obj <= best) { best = obj; j = t; }
        }
      } else {
        if (upper(t)) continue;
        const double diff = gmax - grad[t];
        gmax2 = std::max(gmax2, -grad[t]);
        if (diff > 0) {
          const double quad = qd_i + qd_t + 2.0 * sign[i] * q_it;
          const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
          if (obj <= best) { best = obj; j = t; }
        }
      }
    }
    if (gmax + gmax2 < params.tol || j == l) { converged = true; break; }

    const std::vector<double>& kj = rows.row(j % n);
    const double q_ij = sign[i] * sign[j] * ki[j % n];
    const double qd_j = rows.diag(j % n);
    const double old_i = alpha[i], old_j = alpha[j];
    if (sign[i] != sign[j]) {
      double quad = qd_i + qd_j + 2.0 * q_ij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = qd_i + qd_j - 2.0 * q_ij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < l; ++t)
      grad[t] += sign[t] * (sign[i] * ki[t % n] * di + sign[j] * kj[t % n] * dj);
  }

  // Offset: average over free variables, else midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < l; ++t) {
    const double yg = sign[t] * grad[t];
    if (upper(t)) {
      if (sign[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (sign[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

  SvrModel model;
  model.kernel = kernel;
  model.C = C;
  model.epsilon = params.epsilon;
  model.tol = params.tol;
  model.dim = X.cols();
  model.bias = -rho;
  model.converged = converged;
  model.iterations = iter;
  model.support_vectors = Matrix(0, X.cols());
  for (std::size_t t = 0; t < n; ++t) {
    const double coef = alpha[t] - alpha[t + n];
    if (coef == 0.0) continue;
    model.support_vectors.push_row(X.row(t));
    model.coefficients.push_back(coef);
  }
  return model;
}

double svr_predict(const SvrModel& model, std::span<const double> x) {
  require(x.size() == model.dim, "svr_predict: expected " + std::to_string(model.dim) + " features, got " +
                                     std::to_string(x.size()));
  double f = model.bias;
  for (std::size_t i = 0; i < model.coefficients.size(); ++i)
    f += model.coefficients[i] * model.kernel(model.support_vectors.row(i), x);
  return f;
}

}  // namespace crowdcount
