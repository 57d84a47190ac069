#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "gmmgrid/error.hpp"
#include "gmmgrid/mixture.hpp"
#include "gmmgrid/parallel.hpp"

namespace gmmgrid {

/// Closed form of the integral of N(x; a, sa^2 I) * N(x; b, sb^2 I) over R^dim:
/// (2 pi (sa^2 + sb^2))^(-dim/2) exp(-|a-b|^2 / (2 (sa^2 + sb^2))).
template <typename DerivedA, typename DerivedB>
double gaussian_inner(const Eigen::MatrixBase<DerivedA>& a, double sigma_a, const Eigen::MatrixBase<DerivedB>& b,
                      double sigma_b) {
  detail::require(a.size() == b.size(), "gaussian_inner: dimension mismatch");
  detail::require(sigma_a > 0.0 && sigma_b > 0.0, "gaussian_inner: sigmas must be positive");
  const double v = sigma_a * sigma_a + sigma_b * sigma_b;
  const double d2 = (a.derived().template cast<double>() - b.derived().template cast<double>()).squaredNorm();
  return std::pow(2.0 * kPi * v, -0.5 * static_cast<double>(a.size())) * std::exp(-d2 / (2.0 * v));
}

/// Cross Gram block G(i, j) = <component i of f, component j of g>.
inline Eigen::MatrixXd gram_matrix(const SignedMixture& f, const SignedMixture& g) {
  detail::require(f.dim() == g.dim(), "gram_matrix: dimension mismatch");
  Eigen::MatrixXd out(f.size(), g.size());
  for (Eigen::Index i = 0; i < f.size(); ++i)
    for (Eigen::Index j = 0; j < g.size(); ++j)
      out(i, j) = gaussian_inner(f.means().row(i).transpose(), f.sigmas()(i), g.means().row(j).transpose(),
                                 g.sigmas()(j));
  return out;
}

inline Eigen::MatrixXd gram_matrix(const SignedMixture& f) { return gram_matrix(f, f); }

/// Smallest eigenvalue >= -tol * max(1, largest |eigenvalue|).
inline bool is_psd(const Eigen::MatrixXd& gram, double tol = 1e-10) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return ev.minCoeff() >= -tol * std::max(1.0, ev.cwiseAbs().maxCoeff());
}

namespace detail {

// Sum over j of w_j * <row of f at i, component j of g>, evaluated with
// vectorized exp over the whole block [j_begin, g.size()).
inline double row_inner(const SignedMixture& f, Eigen::Index i, const SignedMixture& g, Eigen::Index j_begin) {
  const Eigen::Index m = g.size() - j_begin;
  if (m <= 0) return 0.0;
  const double half_dim = 0.5 * f.dim();
  const auto& gm = g.means();
  Eigen::ArrayXd d2 = (gm.bottomRows(m).rowwise() - f.means().row(i)).rowwise().squaredNorm().array();
  Eigen::ArrayXd v = g.sigmas().tail(m).array().square() + f.sigmas()(i) * f.sigmas()(i);
  const Eigen::ArrayXd terms = g.weights().tail(m).array() * (2.0 * kPi * v).pow(-half_dim) * (-d2 / (2.0 * v)).exp();
  return terms.sum();
}

}  // namespace detail

/// <f, g> = w_f^T G w_g. Row sums are computed independently and added in row
/// order, so the result does not depend on the worker count.
inline double l2_inner(const SignedMixture& f, const SignedMixture& g, unsigned workers = 1) {
  detail::require(f.dim() == g.dim(), "l2_inner: dimension mismatch");
  std::vector<double> rows(static_cast<std::size_t>(f.size()), 0.0);
  parallel_chunks(rows.size(), workers, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      rows[i] = f.weights()(static_cast<Eigen::Index>(i)) * detail::row_inner(f, static_cast<Eigen::Index>(i), g, 0);
  });
  double acc = 0.0;
  for (double r : rows) acc += r;
  return acc;
}

namespace detail {

// All components share one sigma (KDEs, same-sigma differences): coordinates
// are split into column arrays so the inner loop is a single vectorized exp.
inline double l2_norm_sq_uniform(const SignedMixture& f, unsigned workers) {
  const auto n = f.size();
  const double s = f.sigmas()(0);
  const double diag = std::pow(4.0 * kPi * s * s, -0.5 * f.dim());
  const double scale = -1.0 / (4.0 * s * s);
  std::vector<Eigen::ArrayXd> cols;
  for (int d = 0; d < f.dim(); ++d) cols.emplace_back(f.means().col(d));
  const Eigen::ArrayXd w = f.weights().array();
  std::vector<double> rows(static_cast<std::size_t>(n), 0.0);
  parallel_chunks(rows.size(), workers, [&](std::size_t, std::size_t b, std::size_t e) {
    Eigen::ArrayXd d2(n);
    for (std::size_t ii = b; ii < e; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      const auto m = n - i - 1;
      double off = 0.0;
      if (m > 0) {
        auto acc = d2.head(m);
        acc = (cols[0].tail(m) - cols[0](i)).square();
        for (std::size_t d = 1; d < cols.size(); ++d) acc += (cols[d].tail(m) - cols[d](i)).square();
        off = (w.tail(m) * (acc * scale).exp()).sum();
      }
      rows[ii] = diag * w(i) * (w(i) + 2.0 * off);
    }
  });
  double acc = 0.0;
  for (double r : rows) acc += r;
  return acc;
}

}  // namespace detail

/// ||f||^2 using the symmetric half of the Gram matrix.
inline double l2_norm_sq(const SignedMixture& f, unsigned workers = 1) {
  if (f.size() > 0 && (f.sigmas().array() == f.sigmas()(0)).all()) return detail::l2_norm_sq_uniform(f, workers);
  std::vector<double> rows(static_cast<std::size_t>(f.size()), 0.0);
  parallel_chunks(rows.size(), workers, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t ii = b; ii < e; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      const double wi = f.weights()(i);
      const double s = f.sigmas()(i);
      const double self = wi * wi * std::pow(4.0 * kPi * s * s, -0.5 * f.dim());
      rows[ii] = self + 2.0 * wi * detail::row_inner(f, i, f, i + 1);
    }
  });
  double acc = 0.0;
  for (double r : rows) acc += r;
  return acc;
}

/// ||f - g||^2 as the quadratic form over the combined component list. Tiny
/// negative values from rank-deficient Gram matrices are clamped to zero.
inline double l2_distance_sq(const SignedMixture& f, const SignedMixture& g, unsigned workers = 1) {
  detail::require(f.dim() == g.dim(), "l2_distance_sq: dimension mismatch");
  return std::max(0.0, l2_norm_sq(f - g, workers));
}

struct QuadratureGrid {
  double step = 0.0;          // node spacing; 0 selects min sigma / 4
  double tail_sigmas = 6.0;   // half-width margin beyond the largest |coordinate|
  std::size_t max_nodes = 50'000'000;
};

/// Tensor-product trapezoidal rule for the integral of (f - g)^2 over the box
/// +-(max |mean coordinate| + tail_sigmas * max sigma) on every axis.
inline double quadrature_l2_distance_sq(const SignedMixture& f, const SignedMixture& g, QuadratureGrid grid = {}) {
  detail::require(f.dim() == g.dim(), "quadrature_l2_distance_sq: dimension mismatch");
  if (f.dim() > 3)
    throw Error("quadrature_l2_distance_sq: dim " + std::to_string(f.dim()) +
                " > 3 is too costly; use the closed form l2_distance_sq");
  const SignedMixture diff = f - g;
  if (diff.size() == 0) return 0.0;
  const int dim = diff.dim();
  const double max_sigma = diff.sigmas().maxCoeff();
  const double extent = diff.means().cwiseAbs().maxCoeff() + grid.tail_sigmas * max_sigma;
  const double step = grid.step > 0.0 ? grid.step : diff.sigmas().minCoeff() / 4.0;
  const auto per_axis = static_cast<std::size_t>(std::ceil(2.0 * extent / step)) + 1;
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= per_axis;
  detail::require(total <= grid.max_nodes, "quadrature_l2_distance_sq: grid too large");
  const double h = 2.0 * extent / static_cast<double>(per_axis - 1);

  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  Vector x(dim);
  double acc = 0.0;
  for (std::size_t n = 0; n < total; ++n) {
    std::size_t rem = n;
    double weight = 1.0;
    for (int d = dim - 1; d >= 0; --d) {
      idx[static_cast<std::size_t>(d)] = rem % per_axis;
      rem /= per_axis;
      const auto i = idx[static_cast<std::size_t>(d)];
      x(d) = -extent + h * static_cast<double>(i);
      if (i == 0 || i == per_axis - 1) weight *= 0.5;
    }
    const double v = diff.density(x);
    acc += weight * v * v;
  }
  return acc * std::pow(h, dim);
}

/// Marginal of f along unit direction v: means <v, mu_i>, weights and sigmas
/// unchanged.
inline SignedMixture project_to_direction(const SignedMixture& f, const Vector& v) {
  detail::require(v.size() == f.dim(), "project_to_direction: dimension mismatch");
  detail::require(std::abs(v.norm() - 1.0) <= 1e-12, "project_to_direction: direction must be a unit vector");
  RowMatrix m = f.means() * v;
  return SignedMixture(std::move(m), f.weights(), f.sigmas());
}

}  // namespace gmmgrid
