#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gmmgrid/error.hpp"
#include "gmmgrid/l2.hpp"
#include "gmmgrid/mixture.hpp"
#include "gmmgrid/parallel.hpp"
#include "gmmgrid/rng.hpp"

namespace gmmgrid {

namespace detail {

inline void require_distinct(const std::vector<double>& x, const char* who) {
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if (x[i] == x[j])
        throw Error(std::string(who) + ": nodes must be distinct (x" + std::to_string(i + 1) + " = x" +
                    std::to_string(j + 1) + ")");
}

// e_0..e_n of the given values.
inline std::vector<long double> elementary_symmetric(const std::vector<long double>& x) {
  std::vector<long double> e(x.size() + 1, 0.0L);
  e[0] = 1.0L;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t m = i + 1; m >= 1; --m) e[m] += x[i] * e[m - 1];
  return e;
}

}  // namespace detail

struct MinorDeterminant {
  double det = 0.0;        // direct LU determinant
  double predicted = 0.0;  // e_{n-i+1}(x) * prod_{s>t} (x_s - x_t)
  double scale = 0.0;      // e_{n-i+1}(|x|) * prod |x_s - x_t|, the size of the terms involved

  double relative_error() const {
    const double denom = std::max(scale, std::numeric_limits<double>::min());
    return std::abs(det - predicted) / denom;
  }
};

/// B is the (n+1) x n matrix whose row r (1-based) holds x_j^(r-1). Removing
/// row i leaves a square matrix with det = e_{n-i+1}(x) * prod_{s>t}(x_s - x_t).
/// removed_row = n+1 gives the plain Vandermonde determinant (e_0 = 1).
inline MinorDeterminant vandermonde_minor_det(const std::vector<double>& nodes, int removed_row) {
  const int n = static_cast<int>(nodes.size());
  detail::require(n >= 1, "vandermonde_minor_det: need at least one node");
  if (removed_row < 1 || removed_row > n + 1)
    throw Error("vandermonde_minor_det: removed_row must be in 1.." + std::to_string(n + 1) + ", got " +
                std::to_string(removed_row));
  detail::require_distinct(nodes, "vandermonde_minor_det");

  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  LMatrix m(n, n);
  int out_row = 0;
  for (int r = 1; r <= n + 1; ++r) {
    if (r == removed_row) continue;
    for (int j = 0; j < n; ++j) m(out_row, j) = std::pow(static_cast<long double>(nodes[static_cast<std::size_t>(j)]), r - 1);
    ++out_row;
  }
  std::vector<long double> x(nodes.begin(), nodes.end()), ax;
  for (auto v : x) ax.push_back(std::abs(v));
  long double vdm = 1.0L, vdm_abs = 1.0L;
  for (int s = 0; s < n; ++s)
    for (int t = 0; t < s; ++t) {
      const long double d = x[static_cast<std::size_t>(s)] - x[static_cast<std::size_t>(t)];
      vdm *= d;
      vdm_abs *= std::abs(d);
    }
  const auto order = static_cast<std::size_t>(n - removed_row + 1);
  MinorDeterminant out;
  out.det = static_cast<double>(m.partialPivLu().determinant());
  out.predicted = static_cast<double>(detail::elementary_symmetric(x)[order] * vdm);
  out.scale = static_cast<double>(detail::elementary_symmetric(ax)[order] * vdm_abs);
  return out;
}

/// Nodes x_1..x_k in [-a, a] with designated node i at distance t from its
/// nearest neighbour, and coefficients with |alpha_j| >= alpha_min.
struct VandermondeInstance {
  std::vector<double> nodes;
  double a = 1.0;
  int designated = 0;  // 0-based
  double t = 0.0;
  std::vector<double> weights;
  double alpha_min = 0.0;

  static VandermondeInstance make(std::vector<double> nodes, double a, int designated, std::vector<double> weights,
                                  double alpha_min) {
    detail::require(!nodes.empty() && nodes.size() == weights.size(), "vandermonde instance: bad sizes");
    detail::require(designated >= 0 && designated < static_cast<int>(nodes.size()),
                    "vandermonde instance: designated node out of range");
    detail::require_distinct(nodes, "vandermonde instance");
    for (double x : nodes) detail::require(std::abs(x) <= a, "vandermonde instance: node outside [-a, a]");
    for (double w : weights)
      detail::require(std::abs(w) >= alpha_min, "vandermonde instance: |weight| below alpha_min");
    double t = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nodes.size(); ++j)
      if (static_cast<int>(j) != designated)
        t = std::min(t, std::abs(nodes[j] - nodes[static_cast<std::size_t>(designated)]));
    if (!std::isfinite(t)) t = 2.0 * a;  // single node: any t in (0, 2a]; the bound does not depend on it
    return {std::move(nodes), a, designated, t, std::move(weights), alpha_min};
  }
};

struct NormBound {
  double actual = 0.0;      // ||A alpha||
  double worst_case = 0.0;  // alpha_min * dist(column i, span of other columns): min over admissible alpha
  double bound = 0.0;       // alpha_min * (t / (1 + a))^(k-1)

  bool holds() const { return actual >= bound && worst_case >= bound * (1.0 - 1e-12); }
};

/// A is the k x k Vandermonde matrix with column j = (1, x_j, ..., x_j^(k-1)).
inline NormBound vandermonde_norm_bound(const VandermondeInstance& inst) {
  const int k = static_cast<int>(inst.nodes.size());
  Eigen::MatrixXd A(k, k);
  for (int r = 0; r < k; ++r)
    for (int j = 0; j < k; ++j) A(r, j) = std::pow(inst.nodes[static_cast<std::size_t>(j)], r);
  const Eigen::Map<const Eigen::VectorXd> alpha(inst.weights.data(), k);

  NormBound out;
  out.actual = (A * alpha).norm();
  out.bound = inst.alpha_min * std::pow(inst.t / (1.0 + inst.a), k - 1);
  const Eigen::VectorXd col = A.col(inst.designated);
  if (k == 1) {
    out.worst_case = inst.alpha_min * col.norm();
  } else {
    Eigen::MatrixXd others(k, k - 1);
    for (int j = 0, c = 0; j < k; ++j)
      if (j != inst.designated) others.col(c++) = A.col(j);
    const Eigen::VectorXd coef = others.colPivHouseholderQr().solve(col);
    out.worst_case = inst.alpha_min * (col - others * coef).norm();
  }
  return out;
}

struct DirectionResult {
  Vector direction;
  double achieved = 0.0;  // min over pairs of |<x_i - x_j, v>| / ||x_i - x_j||
  double target = 0.0;    // 1 / k^2
  std::size_t draws = 0;
  bool found = false;
};

inline double min_projection_ratio(const std::vector<Vector>& points, const Vector& v) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const Vector d = points[i] - points[j];
      best = std::min(best, std::abs(d.dot(v)) / d.norm());
    }
  return best;
}

/// Draws Gaussian-normalized unit vectors until one projects every pairwise
/// difference to more than 1/k^2 of its length. `found` is false when the
/// budget runs out; the best ratio seen is then reported.
inline DirectionResult find_separating_direction(const std::vector<Vector>& points, std::uint64_t seed,
                                                 std::size_t budget = 100'000) {
  detail::require(!points.empty(), "find_separating_direction: need at least one point");
  const auto n = points.front().size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    detail::require(points[i].size() == n, "find_separating_direction: dimension mismatch");
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if ((points[i] - points[j]).norm() == 0.0)
        throw Error("find_separating_direction: points must be distinct");
  }
  const double k = static_cast<double>(points.size());
  DirectionResult out;
  out.target = 1.0 / (k * k);
  if (points.size() == 1) {
    out.direction = Vector::Unit(n, 0);
    out.achieved = 1.0;
    out.found = true;
    return out;
  }
  Rng rng(seed);
  out.achieved = -1.0;
  Vector v(n);
  for (std::size_t draw = 1; draw <= budget; ++draw) {
    double norm = 0.0;
    while (norm == 0.0) {
      for (Eigen::Index c = 0; c < n; ++c) v(c) = rng.normal();
      norm = v.norm();
    }
    v /= norm;
    const double r = min_projection_ratio(points, v);
    if (r > out.achieved) {
      out.achieved = r;
      out.direction = v;
    }
    out.draws = draw;
    if (r > out.target) {
      out.found = true;
      break;
    }
  }
  return out;
}

struct FourierNorm {
  double spatial = 0.0;
  double fourier = 0.0;

  double relative_error() const {
    const double denom = std::max(std::abs(spatial), std::abs(fourier));
    if (denom <= 1e-10) return 0.0;  // both vanish
    return std::abs(spatial - fourier) / denom;
  }
};

/// ||q||^2 in closed form and as (1/2pi) * integral of |sum alpha_j exp(i u mu_j)|^2 exp(-sigma^2 u^2)
/// by the trapezoid rule on [-40/sigma, 40/sigma].
inline FourierNorm fourier_norm_check(const SignedMixture& q, std::size_t nodes = 100'000) {
  detail::require(q.dim() == 1, "fourier_norm_check: mixture must be 1-dimensional");
  detail::require(q.size() >= 1, "fourier_norm_check: empty mixture");
  const double sigma = q.sigmas()(0);
  if ((q.sigmas().array() != sigma).any())
    throw Error("fourier_norm_check: all components must share one sigma (Parseval form is stated for that case)");
  detail::require(nodes >= 3, "fourier_norm_check: need at least 3 nodes");
  FourierNorm out;
  out.spatial = l2_norm_sq(q);
  const double half = 40.0 / sigma;
  const double h = 2.0 * half / static_cast<double>(nodes - 1);
  const Eigen::ArrayXd mu = q.means().col(0).array();
  const Eigen::ArrayXd w = q.weights().array();
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    const double u = -half + h * static_cast<double>(i);
    const double re = (w * (mu * u).cos()).sum();
    const double im = (w * (mu * u).sin()).sum();
    double term = (re * re + im * im) * std::exp(-sigma * sigma * u * u);
    if (i == 0 || i == nodes - 1) term *= 0.5;
    acc += term;
  }
  out.fourier = acc * h / (2.0 * kPi);
  return out;
}

struct ProbeRow {
  double t = 0.0;
  double norm_sq = 0.0;
  double bound_shape = 0.0;  // alpha_min^(2m) * t^(2m^2 + 3m), m = number of components
};

struct LowerBoundProbe {
  std::vector<ProbeRow> rows;
  double fitted_slope = 0.0;  // least-squares slope of log ||q||^2 against log t
  double slope_bound = 0.0;   // 2m^2 + 3m
  bool all_positive = false;
};

/// 2k components on a line with spacing t and alternating weights
/// +alpha_min, -alpha_min, so each mean sits next to an opposite-sign one.
inline SignedMixture alternating_probe_mixture(int k, double t, double alpha_min, double sigma) {
  SignedMixture q(1);
  const int m = 2 * k;
  for (int j = 0; j < m; ++j) {
    Vector mu(1);
    mu(0) = (j - 0.5 * (m - 1)) * t;
    q.add(j % 2 == 0 ? alpha_min : -alpha_min, mu, sigma);
  }
  return q;
}

inline LowerBoundProbe lower_bound_probe(int k, const std::vector<double>& t_values, double alpha_min, double sigma) {
  detail::require(k >= 1, "lower_bound_probe: k must be positive");
  detail::require(t_values.size() >= 2, "lower_bound_probe: need at least two t values");
  for (std::size_t i = 0; i < t_values.size(); ++i) {
    detail::require(t_values[i] > 0.0, "lower_bound_probe: t values must be positive");
    if (i > 0) detail::require(t_values[i] < t_values[i - 1], "lower_bound_probe: t values must be decreasing");
  }
  const int m = 2 * k;
  LowerBoundProbe out;
  out.slope_bound = 2.0 * m * m + 3.0 * m;
  out.all_positive = true;
  for (double t : t_values) {
    ProbeRow row{t, l2_norm_sq(alternating_probe_mixture(k, t, alpha_min, sigma)),
                 std::pow(alpha_min, 2 * m) * std::pow(t, out.slope_bound)};
    out.all_positive = out.all_positive && row.norm_sq > 1e-300;
    out.rows.push_back(row);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(out.rows.size());
  for (const auto& r : out.rows) {
    const double x = std::log(r.t), y = std::log(std::max(r.norm_sq, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  out.fitted_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return out;
}

struct ProjectionNormCheck {
  double projected = 0.0;  // ||f_v||^2
  double full = 0.0;       // ||f||^2
  double L = 0.0;
  double factor = 0.0;     // (2L)^dim

  double margin() const { return factor * full - projected; }
  bool holds() const { return projected <= factor * full; }
};

/// ||f_v||^2 <= (2L)^dim ||f||^2 with L = max |mean coordinate| + 6 max sigma.
inline ProjectionNormCheck norm_projection_check(const SignedMixture& f, const Vector& v) {
  ProjectionNormCheck out;
  out.projected = l2_norm_sq(project_to_direction(f, v));
  out.full = l2_norm_sq(f);
  out.L = f.means().cwiseAbs().maxCoeff() + 6.0 * f.sigmas().maxCoeff();
  out.factor = std::pow(2.0 * out.L, f.dim());
  return out;
}

struct PerturbationBound {
  double distance = 0.0;  // ||p - p~||
  double bound = 0.0;     // (2 pi sigma^2)^(-dim/2) sum_i sqrt(|da_i|^2 + d_H^2 / sigma^2)
  bool holds() const { return distance <= bound; }
};

/// Mean/weight perturbation bound for two matched mixtures with common sigma.
/// Only asserted for sigma <= 0.5: for wider components the inequality fails
/// (e.g. dim 1, sigma 1, a single unit weight vs. nothing).
inline PerturbationBound perturbation_bound(const SphericalMixture& p, const SphericalMixture& q) {
  detail::require(p.k() == q.k() && p.dim() == q.dim() && p.sigma() == q.sigma(),
                  "perturbation_bound: mixtures must share k, dim and sigma");
  double dh = 0.0;
  for (int i = 0; i < p.k(); ++i) dh = std::max(dh, (p.means()[i] - q.means()[i]).norm());
  const double s = p.sigma();
  PerturbationBound out;
  out.distance = std::sqrt(l2_distance_sq(SignedMixture::from(p), SignedMixture::from(q)));
  double sum = 0.0;
  for (int i = 0; i < p.k(); ++i) {
    const double da = p.weights()[i] - q.weights()[i];
    sum += std::sqrt(da * da + dh * dh / (s * s));
  }
  out.bound = std::pow(2.0 * kPi * s * s, -0.5 * p.dim()) * sum;
  return out;
}

}  // namespace gmmgrid
