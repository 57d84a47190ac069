#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical kernels.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/hermite.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

inline double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * kPi));
}

/// Adaptive 61-point Gauss-Kronrod on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol);
}

inline double integrate_2d(const std::function<double(double, double)>& f, double a, double b, double c, double d,
                           double tol = 1e-11) {
  return integrate([&](double x) { return integrate([&](double y) { return f(x, y); }, c, d, tol); }, a, b, tol);
}

/// 1-d signed mixture given as parallel arrays.
struct Mix1 {
  std::vector<double> w, mu, s;
  double operator()(double x) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * normal_pdf(x, mu[i], s[i]);
    return acc;
  }
};

/// Determinant by Leibniz expansion over all permutations (n <= 8).
inline long double leibniz_det(const std::vector<std::vector<long double>>& m) {
  const std::size_t n = m.size();
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  long double total = 0.0L;
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) inversions += p[i] > p[j];
    long double prod = (inversions % 2) ? -1.0L : 1.0L;
    for (std::size_t i = 0; i < n; ++i) prod *= m[i][p[i]];
    total += prod;
  } while (std::next_permutation(p.begin(), p.end()));
  return total;
}

/// Sum over all m-subsets of the product of their elements.
inline long double elementary_symmetric(const std::vector<double>& x, std::size_t m) {
  const std::size_t n = x.size();
  long double total = 0.0L;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != m) continue;
    long double prod = 1.0L;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) prod *= x[i];
    total += prod;
  }
  return total;
}

/// gamma_n(x, tau) = tau^n He_n(x / tau), He_n the probabilists' Hermite
/// polynomial, He_n(z) = 2^(-n/2) H_n(z / sqrt 2).
inline double hermite_gamma(unsigned n, double x, double tau) {
  if (tau == 0.0) return std::pow(x, n);
  const double z = x / tau;
  return std::pow(tau, n) * std::pow(2.0, -0.5 * n) * boost::math::hermite(n, z / std::sqrt(2.0));
}

/// E[X^r] for X ~ N(mu, sigma^2) via the binomial expansion and the central
/// moments sigma^j (j-1)!! for even j.
inline double gaussian_moment(double mu, double sigma, int r) {
  double total = 0.0;
  for (int j = 0; j <= r; j += 2) {
    double binom = 1.0;
    for (int i = 1; i <= j; ++i) binom = binom * (r - j + i) / i;
    double dfact = 1.0;
    for (int i = j - 1; i > 1; i -= 2) dfact *= i;
    total += binom * std::pow(mu, r - j) * std::pow(sigma, j) * dfact;
  }
  return total;
}

/// Hausdorff distance by definition on 1-d point sets.
inline double hausdorff_1d(const std::vector<double>& a, const std::vector<double>& b) {
  auto directed = [](const std::vector<double>& p, const std::vector<double>& q) {
    double worst = 0.0;
    for (double x : p) {
      double best = 1e300;
      for (double y : q) best = std::min(best, std::abs(x - y));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace oracle
