#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "gmmgrid/error.hpp"
#include "gmmgrid/l2.hpp"
#include "gmmgrid/mixture.hpp"
#include "gmmgrid/rng.hpp"

namespace gmmgrid {

/// Gaussian-kernel density estimate: N equal-weight components of width h.
struct KdeEstimate {
  SignedMixture mixture;
  double bandwidth;
  std::size_t source_n;  // sample count the estimate was built from

  int dim() const { return mixture.dim(); }
  Eigen::Index size() const { return mixture.size(); }
};

/// h = N^(-(d-1)/(2 d^2)) for d >= 2. At d = 1 that exponent is zero, so the
/// classical N^(-1/5) rate is used instead.
inline double bandwidth_rule(std::size_t n_points, int dim) {
  detail::require(n_points >= 2, "bandwidth_rule: need at least 2 points");
  detail::require(dim >= 1, "bandwidth_rule: dim must be positive");
  const double n = static_cast<double>(n_points);
  if (dim == 1) return std::pow(n, -0.2);
  const double d = dim;
  return std::pow(n, -(d - 1.0) / (2.0 * d * d));
}

inline KdeEstimate build_kde(const SampleMatrix& samples, std::optional<double> bandwidth = std::nullopt) {
  const auto n = static_cast<std::size_t>(samples.size());
  detail::require(n >= 2, "build_kde: need at least 2 samples");
  const double h = bandwidth ? *bandwidth : bandwidth_rule(n, samples.dim());
  detail::require(h > 0.0 && std::isfinite(h), "build_kde: bandwidth must be positive");
  const auto rows = samples.size();
  return KdeEstimate{
      SignedMixture(samples.data, Vector::Constant(rows, 1.0 / static_cast<double>(n)), Vector::Constant(rows, h)),
      h, n};
}

/// Uniform subsample of m components (without replacement, original order
/// kept), reweighted to 1/m. Trades accuracy for grid-search speed.
inline KdeEstimate subsample(const KdeEstimate& kde, std::size_t m, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(kde.size());
  detail::require(m >= 1 && m <= n, "subsample: need 1 <= M <= N");
  if (m == n) return kde;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n - i));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  RowMatrix means(static_cast<Eigen::Index>(m), kde.dim());
  for (std::size_t i = 0; i < m; ++i) means.row(static_cast<Eigen::Index>(i)) = kde.mixture.means().row(static_cast<Eigen::Index>(idx[i]));
  const auto rows = static_cast<Eigen::Index>(m);
  return KdeEstimate{SignedMixture(std::move(means), Vector::Constant(rows, 1.0 / static_cast<double>(m)),
                                   Vector::Constant(rows, kde.bandwidth)),
                     kde.bandwidth, kde.source_n};
}

/// ||p_kde||^2, exact, O(N^2).
inline double kde_self_norm_sq(const KdeEstimate& kde, unsigned workers = 1) {
  return l2_norm_sq(kde.mixture, workers);
}

}  // namespace gmmgrid
