#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gmmgrid/error.hpp"
#include "gmmgrid/rng.hpp"

namespace gmmgrid {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kPi = 3.14159265358979323846;

/// Problem-class bounds attached to a mixture. Both default to "no bound".
struct MixtureConstraints {
  double alpha_min = 0.0;
  double d_min = 0.0;
};

inline double min_pairwise_distance(std::span<const Vector> points) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::min(best, (points[i] - points[j]).norm());
  return best;
}

/// Mixture of k spherical Gaussians N(mu_i, sigma^2 I) sharing one sigma.
class SphericalMixture {
 public:
  SphericalMixture(std::vector<Vector> means, std::vector<double> weights, double sigma,
                   MixtureConstraints constraints = {})
      : means_(std::move(means)), weights_(std::move(weights)), sigma_(sigma), constraints_(constraints) {
    detail::require(!means_.empty(), "mixture needs at least one component");
    detail::require(means_.size() == weights_.size(), "mixture: means/weights count mismatch");
    detail::require(sigma_ > 0.0 && std::isfinite(sigma_), "mixture: sigma must be positive");
    const auto dim = means_.front().size();
    detail::require(dim >= 1, "mixture: dimension must be positive");
    for (const auto& m : means_) {
      detail::require(m.size() == dim, "mixture: all means must have the same dimension");
      detail::require(m.allFinite(), "mixture: non-finite mean");
    }
    double sum = 0.0;
    for (double w : weights_) {
      detail::require(w > 0.0 && w <= 1.0, "mixture: weights must lie in (0,1]");
      detail::require(w >= constraints_.alpha_min, "mixture: weight below alpha_min " +
                                                       std::to_string(constraints_.alpha_min));
      sum += w;
    }
    detail::require(std::abs(sum - 1.0) <= 1e-12, "mixture: weights must sum to 1 (got " + std::to_string(sum) + ")");
    if (means_.size() > 1 && constraints_.d_min > 0.0)
      detail::require(min_pairwise_distance(means_) >= constraints_.d_min,
                      "mixture: pairwise mean distance below d_min " + std::to_string(constraints_.d_min));
  }

  int dim() const { return static_cast<int>(means_.front().size()); }
  int k() const { return static_cast<int>(means_.size()); }
  double sigma() const { return sigma_; }
  const std::vector<Vector>& means() const { return means_; }
  const std::vector<double>& weights() const { return weights_; }
  const MixtureConstraints& constraints() const { return constraints_; }

  /// Minimum pairwise distance between means (+inf for k = 1).
  double separation() const { return min_pairwise_distance(means_); }

  double density(const Vector& x) const {
    const double norm = std::pow(2.0 * kPi * sigma_ * sigma_, -0.5 * dim());
    double acc = 0.0;
    for (int i = 0; i < k(); ++i)
      acc += weights_[i] * std::exp(-(x - means_[i]).squaredNorm() / (2.0 * sigma_ * sigma_));
    return norm * acc;
  }

 private:
  std::vector<Vector> means_;
  std::vector<double> weights_;
  double sigma_;
  MixtureConstraints constraints_;
};

/// Real-weighted combination of spherical Gaussians with per-component sigma.
/// Stored column-wise: means row i belongs to component i.
class SignedMixture {
 public:
  explicit SignedMixture(int dim) : dim_(dim), means_(0, dim) {
    detail::require(dim >= 1, "signed mixture: dimension must be positive");
  }

  SignedMixture(RowMatrix means, Vector weights, Vector sigmas)
      : dim_(static_cast<int>(means.cols())), means_(std::move(means)), weights_(std::move(weights)),
        sigmas_(std::move(sigmas)) {
    detail::require(dim_ >= 1, "signed mixture: dimension must be positive");
    detail::require(means_.rows() == weights_.size() && weights_.size() == sigmas_.size(),
                    "signed mixture: component arrays disagree in length");
    detail::require((sigmas_.array() > 0.0).all(), "signed mixture: sigmas must be positive");
  }

  static SignedMixture from(const SphericalMixture& p) {
    SignedMixture out(p.dim());
    for (int i = 0; i < p.k(); ++i) out.add(p.weights()[i], p.means()[i], p.sigma());
    return out;
  }

  void add(double weight, const Vector& mean, double sigma) {
    detail::require(mean.size() == dim_, "signed mixture: component dimension mismatch");
    detail::require(sigma > 0.0, "signed mixture: sigma must be positive");
    const auto n = means_.rows();
    means_.conservativeResize(n + 1, dim_);
    means_.row(n) = mean.transpose();
    weights_.conservativeResize(n + 1);
    weights_(n) = weight;
    sigmas_.conservativeResize(n + 1);
    sigmas_(n) = sigma;
  }

  int dim() const { return dim_; }
  Eigen::Index size() const { return means_.rows(); }
  const RowMatrix& means() const { return means_; }
  const Vector& weights() const { return weights_; }
  const Vector& sigmas() const { return sigmas_; }

  /// f + scale * g as one component list.
  SignedMixture combined(const SignedMixture& g, double scale) const {
    detail::require(g.dim() == dim_, "signed mixture: dimension mismatch");
    RowMatrix m(size() + g.size(), dim_);
    m << means_, g.means_;
    Vector w(size() + g.size()), s(size() + g.size());
    w << weights_, scale * g.weights_;
    s << sigmas_, g.sigmas_;
    return SignedMixture(std::move(m), std::move(w), std::move(s));
  }

  SignedMixture operator-(const SignedMixture& g) const { return combined(g, -1.0); }

  double density(const Vector& x) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < size(); ++i) {
      const double s2 = sigmas_(i) * sigmas_(i);
      acc += weights_(i) * std::pow(2.0 * kPi * s2, -0.5 * dim_) *
             std::exp(-(x.transpose() - means_.row(i)).squaredNorm() / (2.0 * s2));
    }
    return acc;
  }

 private:
  int dim_;
  RowMatrix means_;
  Vector weights_;
  Vector sigmas_;
};

/// N x dim matrix of draws plus the seed that produced it (0 when loaded).
struct SampleMatrix {
  RowMatrix data;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return data.rows(); }
  int dim() const { return static_cast<int>(data.cols()); }
};

/// Draws n_points rows: component index by inverse-CDF on one uniform, then
/// dim independent normals. Deterministic in (mix, n_points, seed).
inline SampleMatrix sample(const SphericalMixture& mix, std::size_t n_points, std::uint64_t seed) {
  detail::require(n_points >= 1, "sample: n_points must be >= 1");
  Rng rng(seed);
  std::vector<double> cdf(mix.weights().size());
  std::partial_sum(mix.weights().begin(), mix.weights().end(), cdf.begin());
  SampleMatrix out{RowMatrix(static_cast<Eigen::Index>(n_points), mix.dim()), seed};
  for (std::size_t r = 0; r < n_points; ++r) {
    const double u = rng.uniform01() * cdf.back();
    const auto c = std::min<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), cdf.size() - 1);
    const Vector& mu = mix.means()[c];
    for (int d = 0; d < mix.dim(); ++d) out.data(static_cast<Eigen::Index>(r), d) = mu(d) + mix.sigma() * rng.normal();
  }
  return out;
}

inline double hausdorff(std::span<const Vector> a, std::span<const Vector> b) {
  detail::require(!a.empty() && !b.empty(), "hausdorff: both sets must be nonempty");
  detail::require(a.front().size() == b.front().size(), "hausdorff: dimension mismatch");
  auto directed = [](std::span<const Vector> from, std::span<const Vector> to) {
    double worst = 0.0;
    for (const auto& x : from) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& y : to) nearest = std::min(nearest, (x - y).norm());
      worst = std::max(worst, nearest);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

namespace detail {

// Minimum-cost perfect assignment on a square cost matrix (shortest augmenting
// path with potentials, O(n^3)). Returns assignment[row] = column.
inline std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assignment(n, -1);
  for (int j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

}  // namespace detail

struct ComponentMatch {
  std::vector<int> permutation;  // true component i <-> estimated component permutation[i]
  std::vector<double> mean_errors;
  std::vector<double> weight_errors;
  double total_cost = 0.0;
  double max_mean_error = 0.0;
  double max_weight_error = 0.0;
};

/// Permutation minimizing the summed matched mean distance. Exhaustive for
/// k <= 8 (first minimum in lexicographic permutation order wins), optimal
/// assignment above.
inline ComponentMatch match_components(const SphericalMixture& truth, const SphericalMixture& est) {
  detail::require(truth.k() == est.k(), "match_components: component counts differ");
  detail::require(truth.dim() == est.dim(), "match_components: dimensions differ");
  const int k = truth.k();
  Eigen::MatrixXd cost(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) cost(i, j) = (truth.means()[i] - est.means()[j]).norm();

  std::vector<int> best(k);
  std::iota(best.begin(), best.end(), 0);
  if (k <= 8) {
    std::vector<int> perm = best;
    double best_cost = std::numeric_limits<double>::infinity();
    do {
      double c = 0.0;
      for (int i = 0; i < k; ++i) c += cost(i, perm[i]);
      if (c < best_cost) {
        best_cost = c;
        best = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    best = detail::hungarian(cost);
  }

  ComponentMatch m;
  m.permutation = best;
  for (int i = 0; i < k; ++i) {
    const double me = cost(i, best[i]);
    const double we = std::abs(truth.weights()[i] - est.weights()[best[i]]);
    m.mean_errors.push_back(me);
    m.weight_errors.push_back(we);
    m.total_cost += me;
    m.max_mean_error = std::max(m.max_mean_error, me);
    m.max_weight_error = std::max(m.max_weight_error, we);
  }
  return m;
}

}  // namespace gmmgrid
