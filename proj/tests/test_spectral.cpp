#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "gmmgrid/spectral.hpp"

using namespace gmmgrid;
using Catch::Matchers::WithinAbs;

namespace {

void check_orthonormal(const ProjectionBasis& b) {
  const Eigen::MatrixXd g = b.vectors * b.vectors.transpose();
  CHECK((g - Eigen::MatrixXd::Identity(b.k(), b.k())).cwiseAbs().maxCoeff() <= 1e-10);
  for (int i = 1; i < b.k(); ++i) CHECK(b.singular_values(i - 1) >= b.singular_values(i));
}

}  // namespace

TEST_CASE("single Gaussian away from the origin: basis aligns with its mean") {
  Vector mu = Vector::Zero(6);
  mu(0) = 5.0;
  const auto s = sample(SphericalMixture({mu}, {1.0}, 0.1), 10000, 1);
  const auto b = fit_basis(s, 1);
  check_orthonormal(b);
  const double angle = std::acos(std::min(1.0, std::abs(b.vectors(0, 0))));
  CHECK(angle <= 0.01);
  CHECK(b.vectors(0, 0) > 0.0);  // sign convention
}

TEST_CASE("exactly low-rank data is recovered exactly") {
  Rng rng(2);
  SampleMatrix s{RowMatrix::Zero(200, 5), 0};
  for (Eigen::Index r = 0; r < 200; ++r) {
    s.data(r, 1) = rng.normal();
    s.data(r, 3) = rng.normal() + 1.0;
  }
  const auto b = fit_basis(s, 2);
  check_orthonormal(b);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(b.vectors(i, 0)) <= 1e-12);
    CHECK(std::abs(b.vectors(i, 2)) <= 1e-12);
    CHECK(std::abs(b.vectors(i, 4)) <= 1e-12);
  }
}

TEST_CASE("fit_basis errors") {
  SampleMatrix one{RowMatrix::Ones(1, 4), 0};
  CHECK_THROWS_AS(fit_basis(one, 2), Error);
  SampleMatrix narrow{RowMatrix::Ones(10, 1), 0};
  CHECK_THROWS_AS(fit_basis(narrow, 2), Error);
  SampleMatrix rank1{RowMatrix::Ones(10, 4), 0};
  CHECK_THROWS_AS(fit_basis(rank1, 2), Error);
}

TEST_CASE("SVD and Gram paths agree") {
  std::vector<Vector> means{Vector::Zero(10), Vector::Zero(10)};
  means[0](0) = 5;
  means[1](1) = 5;
  const auto s = sample(SphericalMixture(means, {0.5, 0.5}, 1.0), 20000, 3);
  const auto a = fit_basis(s, 2);
  const auto g = fit_basis(s, 2, 0.0);
  for (int i = 0; i < 2; ++i) {
    CHECK((a.vectors.row(i) - g.vectors.row(i)).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK_THAT(a.singular_values(i), Catch::Matchers::WithinRel(g.singular_values(i), 1e-10));
  }
  check_orthonormal(g);
}

TEST_CASE("projection of a well separated mixture preserves the means") {
  std::vector<Vector> means{Vector::Zero(10), Vector::Zero(10)};
  means[0](0) = 5;
  means[1](1) = 5;
  const auto s = sample(SphericalMixture(means, {0.5, 0.5}, 1.0), 1'000'000, 4);
  const auto b = fit_basis(s, 2);
  for (const auto& m : means) CHECK((m - lift(project(m, b), b)).norm() <= 0.05);
}

TEST_CASE("project and lift") {
  Rng rng(5);
  std::vector<Vector> means{Vector::Zero(4), Vector::Zero(4)};
  means[0](2) = 2;
  means[1](3) = -1;
  const auto s = sample(SphericalMixture(means, {0.5, 0.5}, 0.5), 5000, 6);
  const auto b = fit_basis(s, 2);

  for (int j = 0; j < 2; ++j) {
    const Vector vj = b.vectors.row(j).transpose();
    CHECK((project(vj, b) - Vector::Unit(2, j)).norm() <= 1e-12);
    CHECK((lift(Vector::Unit(2, j), b) - vj).norm() <= 1e-12);
  }
  for (int trial = 0; trial < 50; ++trial) {
    const Vector x = Vector::NullaryExpr(4, [&] { return rng.normal(); });
    const Vector y = Vector::NullaryExpr(4, [&] { return rng.normal(); });
    CHECK((project(x, b) - project(y, b)).norm() <= (x - y).norm() + 1e-12);
    const Vector u = Vector::NullaryExpr(2, [&] { return rng.normal(); });
    const Vector w = Vector::NullaryExpr(2, [&] { return rng.normal(); });
    CHECK((project(lift(u, b), b) - u).norm() <= 1e-12);
    CHECK_THAT((lift(u, b) - lift(w, b)).norm(), WithinAbs((u - w).norm(), 1e-12));
    const Vector px = lift(project(x, b), b);
    CHECK((lift(project(px, b), b) - px).norm() <= 1e-12);
    // residual is orthogonal to the span
    CHECK((b.vectors * (x - px)).norm() <= 1e-12);
  }
  CHECK_THROWS_AS(project(Vector(Vector::Zero(3)), b), Error);
  CHECK_THROWS_AS(lift(Vector(Vector::Zero(3)), b), Error);
}

TEST_CASE("projected separation and error composition on synthetic instances") {
  Rng rng(7);
  const double d_min = 0.6, eps = 0.2;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vector> means;
    while (true) {
      means = {Vector::NullaryExpr(6, [&] { return rng.uniform(-1, 1); }),
               Vector::NullaryExpr(6, [&] { return rng.uniform(-1, 1); })};
      if ((means[0] - means[1]).norm() >= d_min) break;
    }
    const auto s = sample(SphericalMixture(means, {0.4, 0.6}, 0.2), 100000, rng.next_u64());
    const auto b = fit_basis(s, 2);
    std::vector<Vector> nu;
    double max_err = 0.0;
    for (const auto& m : means) {
      nu.push_back(project(m, b));
      max_err = std::max(max_err, (m - lift(nu.back(), b)).norm());
    }
    if (max_err <= eps / 2) CHECK((nu[0] - nu[1]).norm() >= d_min / 2);
    // a perturbed k-dim estimate: lifted error is at most projection error plus coordinate error
    for (const auto& m : means) {
      const Vector est = project(m, b) + Vector::Constant(2, 0.01);
      CHECK((m - lift(est, b)).norm() <= (m - lift(project(m, b), b)).norm() + (est - project(m, b)).norm() + 1e-12);
    }
  }
}

TEST_CASE("projection error shrinks with N (median over seeds)") {
  std::vector<Vector> means{Vector::Zero(8), Vector::Zero(8)};
  means[0].head(2) << 0.5, -0.3;
  means[1].head(3) << -0.4, 0.2, 0.3;
  const SphericalMixture p(means, {0.4, 0.6}, 0.3);
  std::vector<double> medians;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto b = fit_basis(sample(p, n, seed), 2);
      double e = 0.0;
      for (const auto& m : means) e = std::max(e, (m - lift(project(m, b), b)).norm());
      errs.push_back(e);
    }
    std::nth_element(errs.begin(), errs.begin() + 5, errs.end());
    medians.push_back(errs[5]);
  }
  CHECK(medians[0] > medians[1]);
  CHECK(medians[1] > medians[2]);
}
