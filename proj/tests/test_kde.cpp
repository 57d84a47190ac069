#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "gmmgrid/kde.hpp"
#include "oracles.hpp"

using namespace gmmgrid;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("bandwidth rule examples") {
  CHECK_THAT(bandwidth_rule(10000, 2), WithinRel(std::pow(10.0, -0.5), 1e-14));
  CHECK_THAT(bandwidth_rule(10000, 2), WithinAbs(0.3162, 1e-4));
  CHECK_THAT(bandwidth_rule(100000, 1), WithinRel(0.1, 1e-14));
  CHECK_THAT(bandwidth_rule(100000000, 4), WithinRel(std::pow(10.0, -0.75), 1e-14));
  CHECK_THAT(bandwidth_rule(100000000, 4), WithinAbs(0.1778, 1e-4));
  CHECK_THROWS_AS(bandwidth_rule(1, 2), Error);
}

TEST_CASE("build_kde structure and a hand-computed density") {
  SampleMatrix s{RowMatrix(2, 1), 0};
  s.data << -1.0, 1.0;
  const auto kde = build_kde(s, 1.0);
  CHECK(kde.size() == 2);
  CHECK(kde.source_n == 2);
  CHECK_THAT(kde.mixture.density(Vector::Zero(1)), WithinAbs(std::exp(-0.5) / std::sqrt(2 * oracle::kPi), 1e-15));
  CHECK_THAT(kde.mixture.density(Vector::Zero(1)), WithinAbs(0.24197, 1e-5));
  CHECK_THAT(kde.mixture.weights().sum(), WithinAbs(1.0, 1e-15));
  CHECK((kde.mixture.sigmas().array() == 1.0).all());

  SampleMatrix one{RowMatrix::Zero(1, 1), 0};
  CHECK_THROWS_AS(build_kde(one), Error);
  CHECK_THROWS_AS(build_kde(s, -1.0), Error);
}

TEST_CASE("KDE is a nonnegative density integrating to one") {
  const SphericalMixture p({Vector::Constant(1, -1.0), Vector::Constant(1, 1.5)}, {0.3, 0.7}, 0.5);
  const auto kde = build_kde(sample(p, 200, 1));
  CHECK(kde.bandwidth == bandwidth_rule(200, 1));
  const double total = oracle::integrate([&](double x) { return kde.mixture.density(Vector::Constant(1, x)); }, -10, 10);
  CHECK_THAT(total, WithinAbs(1.0, 1e-9));
  for (double x = -5; x <= 5; x += 0.25) CHECK(kde.mixture.density(Vector::Constant(1, x)) >= 0.0);
}

TEST_CASE("closed-form KDE error matches quadrature") {
  const SphericalMixture p({Vector::Constant(1, -1.0), Vector::Constant(1, 1.5)}, {0.3, 0.7}, 0.5);
  const auto kde = build_kde(sample(p, 300, 2));
  const auto diff = kde.mixture - SignedMixture::from(p);
  const double q = oracle::integrate([&](double x) { const double v = diff.density(Vector::Constant(1, x)); return v * v; }, -8, 8);
  CHECK_THAT(l2_distance_sq(kde.mixture, SignedMixture::from(p)), WithinRel(q, 1e-6));
}

TEST_CASE("subsample keeps order, reweights and is reproducible") {
  const SphericalMixture p({Vector::Zero(2)}, {1.0}, 1.0);
  const auto kde = build_kde(sample(p, 1000, 3));
  const auto a = subsample(kde, 100, 9), b = subsample(kde, 100, 9);
  CHECK(a.size() == 100);
  CHECK(a.mixture.means() == b.mixture.means());
  CHECK_THAT(a.mixture.weights().sum(), WithinAbs(1.0, 1e-14));
  CHECK(a.bandwidth == kde.bandwidth);
  CHECK(a.source_n == 1000);
  CHECK_THROWS_AS(subsample(kde, 0, 1), Error);
  CHECK_THROWS_AS(subsample(kde, 1001, 1), Error);
}

TEST_CASE("KDE error decreases with N (median over 10 seeds, 2-d, up to 1e4)") {
  const SphericalMixture p({(Vector(2) << -0.5, 0.2).finished(), (Vector(2) << 0.6, -0.1).finished()}, {0.4, 0.6}, 0.3);
  const auto fp = SignedMixture::from(p);
  std::vector<double> medians;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 10; ++seed) errs.push_back(l2_distance_sq(build_kde(sample(p, n, seed)).mixture, fp));
    std::nth_element(errs.begin(), errs.begin() + 5, errs.end());
    medians.push_back(errs[5]);
  }
  CHECK(medians[0] > medians[1]);
  CHECK(medians[1] > medians[2]);
}
