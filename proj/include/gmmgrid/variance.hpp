#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gmmgrid/error.hpp"
#include "gmmgrid/mixture.hpp"

namespace gmmgrid {

/// gamma_n(x, tau) = sum_m coeff[m] * x^(n-2m) * tau^(2m), built from
/// gamma_n = x gamma_{n-1} - (n-1) tau^2 gamma_{n-2}, gamma_0 = 1, gamma_1 = x.
struct HermitePolynomial {
  int degree = 0;
  std::vector<std::int64_t> coeff;

  double operator()(double x, double tau) const {
    double acc = 0.0;
    for (std::size_t m = 0; m < coeff.size(); ++m)
      acc += static_cast<double>(coeff[m]) * std::pow(x, degree - 2 * static_cast<int>(m)) *
             std::pow(tau, 2 * static_cast<int>(m));
    return acc;
  }
};

inline HermitePolynomial hermite_polynomial(int n) {
  detail::require(n >= 0, "hermite_polynomial: order must be nonnegative");
  detail::require(n <= 40, "hermite_polynomial: order above 40 overflows 64-bit coefficients");
  std::vector<std::int64_t> prev2{1}, prev{1};  // gamma_0, gamma_1
  if (n == 0) return {0, prev2};
  for (int i = 2; i <= n; ++i) {
    std::vector<std::int64_t> cur(static_cast<std::size_t>(i / 2 + 1), 0);
    for (std::size_t m = 0; m < prev.size(); ++m) cur[m] += prev[m];
    for (std::size_t m = 0; m < prev2.size(); ++m) cur[m + 1] -= static_cast<std::int64_t>(i - 1) * prev2[m];
    prev2 = std::move(prev);
    prev = std::move(cur);
  }
  return {n, prev};
}

/// Raw moments m_r = E[X^r], r = 0..max_order.
struct HermiteMomentTable {
  std::vector<double> moments;
  std::size_t n_points = 0;  // 0 for exact (population) moments

  int max_order() const { return static_cast<int>(moments.size()) - 1; }

  /// One pass with Neumaier-compensated sums per order.
  static HermiteMomentTable from_samples(std::span<const double> xs, int max_order) {
    detail::require(!xs.empty(), "moment table: need at least one sample");
    detail::require(max_order >= 0, "moment table: order must be nonnegative");
    const auto orders = static_cast<std::size_t>(max_order + 1);
    std::vector<double> sum(orders, 0.0), comp(orders, 0.0);
    for (double x : xs) {
      double p = 1.0;
      for (std::size_t r = 0; r < orders; ++r) {
        const double t = sum[r] + p;
        comp[r] += std::abs(sum[r]) >= std::abs(p) ? (sum[r] - t) + p : (p - t) + sum[r];
        sum[r] = t;
        p *= x;
      }
    }
    HermiteMomentTable table;
    table.n_points = xs.size();
    for (std::size_t r = 0; r < orders; ++r) table.moments.push_back((sum[r] + comp[r]) / static_cast<double>(xs.size()));
    table.moments[0] = 1.0;
    return table;
  }
};

/// Raw moments of N(mu, sigma^2) via E X^i = mu E X^(i-1) + (i-1) sigma^2 E X^(i-2).
inline std::vector<double> gaussian_raw_moments(double mu, double sigma, int max_order) {
  detail::require(sigma > 0.0, "gaussian_raw_moments: sigma must be positive");
  detail::require(max_order >= 0, "gaussian_raw_moments: order must be nonnegative");
  std::vector<double> m(static_cast<std::size_t>(max_order + 1));
  m[0] = 1.0;
  if (max_order >= 1) m[1] = mu;
  for (int i = 2; i <= max_order; ++i)
    m[static_cast<std::size_t>(i)] = mu * m[static_cast<std::size_t>(i - 1)] +
                                     (i - 1) * sigma * sigma * m[static_cast<std::size_t>(i - 2)];
  return m;
}

/// Weight-averaged Gaussian moments of a 1-d mixture with common sigma.
inline HermiteMomentTable mixture_raw_moments(std::span<const double> weights, std::span<const double> means,
                                              double sigma, int max_order) {
  detail::require(weights.size() == means.size() && !weights.empty(), "mixture_raw_moments: bad component lists");
  HermiteMomentTable t;
  t.moments.assign(static_cast<std::size_t>(max_order + 1), 0.0);
  for (std::size_t c = 0; c < weights.size(); ++c) {
    const auto g = gaussian_raw_moments(means[c], sigma, max_order);
    for (std::size_t r = 0; r < g.size(); ++r) t.moments[r] += weights[c] * g[r];
  }
  return t;
}

/// (k+1) x (k+1) Hankel matrix whose (i, j) entry is E[gamma_{i+j}(X, tau)],
/// a polynomial in u = tau^2 with coefficients linear in the moments.
class HankelPolynomialMatrix {
 public:
  HankelPolynomialMatrix(const HermiteMomentTable& moments, int k) : k_(k) {
    detail::require(k >= 1, "build_hankel: k must be positive");
    if (moments.max_order() < 2 * k)
      throw Error("build_hankel: moments up to order " + std::to_string(2 * k) + " required, table has " +
                  std::to_string(moments.max_order()));
    for (int n = 0; n <= 2 * k; ++n) {
      const auto h = hermite_polynomial(n);
      std::vector<double> poly(h.coeff.size());
      for (std::size_t m = 0; m < h.coeff.size(); ++m)
        poly[m] = static_cast<double>(h.coeff[m]) * moments.moments[static_cast<std::size_t>(n - 2 * static_cast<int>(m))];
      by_order_.push_back(std::move(poly));
    }
  }

  int k() const { return k_; }
  int size() const { return k_ + 1; }

  /// Coefficients in u = tau^2 of entry (i, j).
  const std::vector<double>& entry(int i, int j) const { return by_order_[static_cast<std::size_t>(i + j)]; }

  Eigen::MatrixXd evaluate(double tau) const {
    const double u = tau * tau;
    std::vector<double> vals;
    for (const auto& p : by_order_) {
      double acc = 0.0;
      for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * u + *it;
      vals.push_back(acc);
    }
    Eigen::MatrixXd m(size(), size());
    for (int i = 0; i < size(); ++i)
      for (int j = 0; j < size(); ++j) m(i, j) = vals[static_cast<std::size_t>(i + j)];
    return m;
  }

 private:
  int k_;
  std::vector<std::vector<double>> by_order_;
};

inline HankelPolynomialMatrix build_hankel(const HermiteMomentTable& moments, int k) {
  return HankelPolynomialMatrix(moments, k);
}

/// d(tau) = det M(tau), evaluated numerically (partial-pivot LU).
class DeterminantFunction {
 public:
  explicit DeterminantFunction(HankelPolynomialMatrix h) : h_(std::move(h)) {}

  double operator()(double tau) const { return h_.evaluate(tau).partialPivLu().determinant(); }

  /// k(k+1): d is homogeneous of that degree in (x, tau) before averaging.
  int degree() const { return h_.k() * (h_.k() + 1); }

  /// Coefficient of tau^(k(k+1)): det of the Hankel matrix of gamma_n(0, 1),
  /// which does not depend on the data.
  double leading_coefficient() const { return leading_coefficient(h_.k()); }

  static double leading_coefficient(int k) {
    Eigen::MatrixXd m(k + 1, k + 1);
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j <= k; ++j) m(i, j) = hermite_polynomial(i + j)(0.0, 1.0);
    return m.determinant();
  }

  /// Coefficients c_0..c_D of d as a polynomial in u = tau^2 (D = k(k+1)/2),
  /// recovered by interpolating D+1 evaluations at u = scale * 0..D.
  std::vector<double> coefficients_in_tau_sq(double scale = 1.0) const {
    const int D = degree() / 2;
    Eigen::MatrixXd V(D + 1, D + 1);
    Eigen::VectorXd rhs(D + 1);
    for (int r = 0; r <= D; ++r) {
      const double u = scale * r;
      double p = 1.0;
      for (int c = 0; c <= D; ++c, p *= u) V(r, c) = p;
      rhs(r) = (*this)(std::sqrt(u));
    }
    Eigen::VectorXd c = V.fullPivLu().solve(rhs);
    return {c.data(), c.data() + c.size()};
  }

  const HankelPolynomialMatrix& matrix() const { return h_; }

 private:
  HankelPolynomialMatrix h_;
};

struct VarianceOptions {
  std::optional<Vector> direction;  // unit vector; default e_1
  std::optional<double> tau_max;    // default 1.5 * sample standard deviation
  int scan_points = 1000;
  double tolerance = 1e-10;
};

struct VarianceEstimate {
  double sigma_star = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double dhat_first = 0.0;  // d at the first scan node
  double dhat_last = 0.0;   // d at tau_max
  double dhat_min = 0.0;
  double dhat_max = 0.0;
  double tau_max = 0.0;
  int dhat_degree = 0;
  std::size_t n_used = 0;
  bool flat_root = false;  // |d| < 1e-14 across the bracket: root may be multiple
};

/// Smallest positive root of d on (0, tau_max]: first sign change on a uniform
/// scan, refined by bisection to the requested interval width.
inline VarianceEstimate smallest_positive_root(const DeterminantFunction& d, double tau_max, int scan_points = 1000,
                                               double tolerance = 1e-10) {
  detail::require(tau_max > 0.0, "estimate_variance: tau_max must be positive");
  detail::require(scan_points >= 2, "estimate_variance: need at least 2 scan points");
  VarianceEstimate est;
  est.tau_max = tau_max;
  est.dhat_degree = d.degree();
  const double step = tau_max / scan_points;
  double prev_tau = step, prev = d(prev_tau);
  est.dhat_first = prev;
  est.dhat_min = est.dhat_max = prev;
  std::optional<std::pair<double, double>> bracket;
  double f_lo = prev;
  if (prev == 0.0) bracket = {prev_tau, prev_tau};
  for (int i = 2; i <= scan_points && !bracket; ++i) {
    const double tau = step * i;
    const double v = d(tau);
    est.dhat_min = std::min(est.dhat_min, v);
    est.dhat_max = std::max(est.dhat_max, v);
    if (v == 0.0) {
      bracket = {tau, tau};
    } else if ((v > 0.0) != (prev > 0.0)) {
      bracket = {prev_tau, tau};
      f_lo = prev;
    }
    prev_tau = tau;
    prev = v;
  }
  est.dhat_last = d(tau_max);
  if (!bracket) {
    for (int i = 1; i <= scan_points; ++i) {
      const double v = d(step * i);
      est.dhat_min = std::min(est.dhat_min, v);
      est.dhat_max = std::max(est.dhat_max, v);
    }
    throw Error("estimate_variance: no root bracketed in (0, " + std::to_string(tau_max) +
                "]; scanned d ranges over [" + std::to_string(est.dhat_min) + ", " + std::to_string(est.dhat_max) +
                "] (too few samples, wrong k, or tau_max too small)");
  }
  auto [lo, hi] = *bracket;
  const double f_hi_initial = d(hi);
  est.flat_root = std::abs(f_lo) < 1e-14 && std::abs(f_hi_initial) < 1e-14;
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    const double fm = d(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if ((fm > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
    }
  }
  est.bracket_lo = lo;
  est.bracket_hi = hi;
  est.sigma_star = 0.5 * (lo + hi);
  return est;
}

/// Moment-determinant variance estimate from exact or empirical moments.
inline VarianceEstimate estimate_variance_from_moments(const HermiteMomentTable& moments, int k, double tau_max,
                                                       int scan_points = 1000, double tolerance = 1e-10) {
  DeterminantFunction d(build_hankel(moments, k));
  auto est = smallest_positive_root(d, tau_max, scan_points, tolerance);
  est.n_used = moments.n_points;
  return est;
}

/// Projects the samples onto `direction` (default e_1), forms the empirical
/// Hermite-moment Hankel matrix and returns the smallest positive root of its
/// determinant as the estimate of sigma.
inline VarianceEstimate estimate_variance(const SampleMatrix& samples, int k, const VarianceOptions& opts = {}) {
  detail::require(samples.size() >= 1, "estimate_variance: need at least one sample");
  detail::require(k >= 1, "estimate_variance: k must be positive");
  Vector v = Vector::Zero(samples.dim());
  if (opts.direction) {
    detail::require(opts.direction->size() == samples.dim(), "estimate_variance: direction dimension mismatch");
    detail::require(std::abs(opts.direction->norm() - 1.0) <= 1e-9, "estimate_variance: direction must be a unit vector");
    v = *opts.direction;
  } else {
    v(0) = 1.0;
  }
  const Eigen::VectorXd proj = samples.data * v;
  const auto table = HermiteMomentTable::from_samples(std::span<const double>(proj.data(), static_cast<std::size_t>(proj.size())), 2 * k);
  double tau_max = 0.0;
  if (opts.tau_max) {
    tau_max = *opts.tau_max;
  } else {
    const double var = table.moments[2] - table.moments[1] * table.moments[1];
    tau_max = 1.5 * std::sqrt(std::max(var, 0.0));
  }
  return estimate_variance_from_moments(table, k, tau_max, opts.scan_points, opts.tolerance);
}

}  // namespace gmmgrid
