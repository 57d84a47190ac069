#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gmmgrid/error.hpp"
#include "gmmgrid/mixture.hpp"

namespace gmmgrid {

/// k orthonormal directions in R^n (rows of `vectors`) with their singular
/// values in descending order.
struct ProjectionBasis {
  RowMatrix vectors;  // k x n
  Vector singular_values;

  int k() const { return static_cast<int>(vectors.rows()); }
  int ambient_dim() const { return static_cast<int>(vectors.cols()); }
};

inline constexpr double kGramPathThreshold = 1e8;  // N * dim entries

/// Top-k right singular vectors of the raw (uncentered) data matrix. Uses a
/// thin SVD of A when N*dim <= 1e8, else the eigenvectors of A^T A
/// accumulated in one pass. Each vector is flipped so its largest-magnitude
/// entry is positive.
inline ProjectionBasis fit_basis(const SampleMatrix& samples, int k, double gram_threshold = kGramPathThreshold) {
  const auto n_rows = samples.size();
  const int dim = samples.dim();
  detail::require(k >= 1, "fit_basis: k must be positive");
  if (n_rows < k)
    throw Error("fit_basis: need N >= k samples (N=" + std::to_string(n_rows) + ", k=" + std::to_string(k) + ")");
  if (dim < k)
    throw Error("fit_basis: need dim >= k (dim=" + std::to_string(dim) + ", k=" + std::to_string(k) + ")");

  Vector sv(dim);
  Eigen::MatrixXd right(dim, dim);
  if (static_cast<double>(n_rows) * dim <= gram_threshold) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(samples.data, Eigen::ComputeThinV);
    sv = svd.singularValues();
    right = svd.matrixV();
  } else {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
    constexpr Eigen::Index block = 65536;
    for (Eigen::Index r = 0; r < n_rows; r += block) {
      const auto rows = std::min(block, n_rows - r);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(samples.data.middleRows(r, rows).transpose());
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    // ascending eigenvalues -> reverse to descending
    for (int i = 0; i < dim; ++i) {
      sv(i) = std::sqrt(std::max(0.0, es.eigenvalues()(dim - 1 - i)));
      right.col(i) = es.eigenvectors().col(dim - 1 - i);
    }
  }

  const double tol = std::max<double>(n_rows, dim) * std::numeric_limits<double>::epsilon() * sv(0);
  if (!(sv(k - 1) > tol))
    throw Error("fit_basis: data matrix rank is below k=" + std::to_string(k) + " (singular value " +
                std::to_string(k) + " is " + std::to_string(sv(k - 1)) + ")");

  ProjectionBasis basis{RowMatrix(k, dim), sv.head(k)};
  for (int i = 0; i < k; ++i) {
    Vector v = right.col(i);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.vectors.row(i) = v.normalized().transpose();
  }
  return basis;
}

/// Coordinates along the basis: row r of the result is (<x_r, v_1>, ..., <x_r, v_k>).
inline RowMatrix project(const RowMatrix& points, const ProjectionBasis& basis) {
  detail::require(points.cols() == basis.ambient_dim(), "project: dimension mismatch");
  return points * basis.vectors.transpose();
}

inline Vector project(const Vector& x, const ProjectionBasis& basis) {
  detail::require(x.size() == basis.ambient_dim(), "project: dimension mismatch");
  return basis.vectors * x;
}

inline SampleMatrix project(const SampleMatrix& samples, const ProjectionBasis& basis) {
  return SampleMatrix{project(samples.data, basis), samples.seed};
}

/// Inverse of project on span(basis): sum_j coords_j v_j.
inline Vector lift(const Vector& coords, const ProjectionBasis& basis) {
  detail::require(coords.size() == basis.k(), "lift: dimension mismatch");
  return basis.vectors.transpose() * coords;
}

inline std::vector<Vector> lift(const std::vector<Vector>& coords, const ProjectionBasis& basis) {
  std::vector<Vector> out;
  out.reserve(coords.size());
  for (const auto& c : coords) out.push_back(lift(c, basis));
  return out;
}

}  // namespace gmmgrid
