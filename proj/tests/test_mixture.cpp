#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>

#include "gmmgrid/mixture.hpp"
#include "oracles.hpp"

using namespace gmmgrid;
using Catch::Matchers::WithinAbs;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

}  // namespace

TEST_CASE("mixture validates weights, sigma and constraints") {
  CHECK_NOTHROW(SphericalMixture({v1(0), v1(1)}, {0.5, 0.5}, 1.0));
  CHECK_THROWS_AS(SphericalMixture({v1(0), v1(1)}, {0.5, 0.6}, 1.0), Error);
  CHECK_THROWS_AS(SphericalMixture({v1(0)}, {1.0}, 0.0), Error);
  CHECK_THROWS_AS(SphericalMixture({v1(0), v1(1)}, {0.9, 0.1}, 1.0, {0.2, 0.0}), Error);
  CHECK_THROWS_AS(SphericalMixture({v1(0), v1(0.1)}, {0.5, 0.5}, 1.0, {0.0, 0.5}), Error);
  CHECK_THROWS_AS(SphericalMixture({v1(0), Vector::Zero(2)}, {0.5, 0.5}, 1.0), Error);
  CHECK_THROWS_AS(SphericalMixture({}, {}, 1.0), Error);
}

TEST_CASE("density integrates to one") {
  const SphericalMixture m({v1(-1.0), v1(2.0)}, {0.3, 0.7}, 0.6);
  const double total = oracle::integrate([&](double x) { return m.density(v1(x)); }, -12, 14);
  CHECK_THAT(total, WithinAbs(1.0, 1e-10));

  const SphericalMixture m2({Vector::Zero(2), Vector::Ones(2)}, {0.5, 0.5}, 0.8);
  const double t2 = oracle::integrate_2d(
      [&](double x, double y) { return m2.density((Vector(2) << x, y).finished()); }, -7, 8, -7, 8, 1e-9);
  CHECK_THAT(t2, WithinAbs(1.0, 1e-7));
}

TEST_CASE("sample: moments of a single Gaussian") {
  const SphericalMixture m({Vector::Zero(3)}, {1.0}, 1.0);
  const auto s = sample(m, 100000, 7);
  for (int d = 0; d < 3; ++d) {
    const Eigen::ArrayXd col = s.data.col(d);
    const double mean = col.mean();
    const double var = (col - mean).square().mean();
    CHECK(std::abs(mean) <= 0.02);
    CHECK(std::abs(var - 1.0) <= 0.05);
  }
}

TEST_CASE("sample: symmetric two-component split") {
  const SphericalMixture m({v1(-5), v1(5)}, {0.5, 0.5}, 0.1);
  const auto s = sample(m, 10000, 3);
  const double frac = static_cast<double>((s.data.col(0).array() < 0.0).count()) / 10000.0;
  CHECK(frac >= 0.48);
  CHECK(frac <= 0.52);
}

TEST_CASE("sample is reproducible from its seed") {
  const SphericalMixture m({Vector::Zero(2), Vector::Ones(2)}, {0.25, 0.75}, 0.3);
  const auto a = sample(m, 500, 42), b = sample(m, 500, 42), c = sample(m, 500, 43);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  CHECK(a.seed == 42);
}

TEST_CASE("hausdorff examples") {
  const std::vector<Vector> z{Vector::Zero(2)};
  CHECK(hausdorff(z, z) == 0.0);
  CHECK_THAT(hausdorff(std::vector<Vector>{v1(0)}, std::vector<Vector>{v1(3)}), WithinAbs(3.0, 1e-15));
  CHECK_THAT(hausdorff(std::vector<Vector>{v1(0), v1(10)}, std::vector<Vector>{v1(1), v1(10)}), WithinAbs(1.0, 1e-15));
  CHECK_THROWS_AS(hausdorff(std::vector<Vector>{}, z), Error);
}

TEST_CASE("hausdorff metric properties on random sets") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> raw(3);
    std::vector<std::vector<Vector>> sets(3);
    for (int s = 0; s < 3; ++s) {
      const int n = 1 + static_cast<int>(rng.uniform01() * 4);
      for (int i = 0; i < n; ++i) {
        raw[s].push_back(rng.uniform(-5, 5));
        sets[s].push_back(v1(raw[s].back()));
      }
    }
    const double ab = hausdorff(sets[0], sets[1]), ba = hausdorff(sets[1], sets[0]);
    CHECK(ab == ba);
    CHECK(ab >= 0.0);
    CHECK_THAT(ab, WithinAbs(oracle::hausdorff_1d(raw[0], raw[1]), 1e-12));
    CHECK(hausdorff(sets[0], sets[2]) <= ab + hausdorff(sets[1], sets[2]) + 1e-12);
  }
}

TEST_CASE("match_components examples") {
  const SphericalMixture t({v1(0), v1(10)}, {0.5, 0.5}, 1.0);
  const auto same = match_components(t, t);
  CHECK(same.permutation == std::vector<int>{0, 1});
  CHECK(same.max_mean_error == 0.0);
  CHECK(same.max_weight_error == 0.0);

  const SphericalMixture e({v1(10.1), v1(0.2)}, {0.5, 0.5}, 1.0);
  const auto m = match_components(t, e);
  CHECK(m.permutation == std::vector<int>{1, 0});
  CHECK_THAT(m.mean_errors[0], WithinAbs(0.2, 1e-12));
  CHECK_THAT(m.mean_errors[1], WithinAbs(0.1, 1e-12));

  const SphericalMixture three({v1(0), v1(1), v1(2)}, {0.2, 0.3, 0.5}, 1.0);
  CHECK_THROWS_AS(match_components(t, three), Error);
}

TEST_CASE("match_components agrees with brute force and the assignment solver") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 3 + trial % 4;
    std::vector<Vector> a, b;
    std::vector<double> w(static_cast<std::size_t>(k), 1.0 / k);
    for (int i = 0; i < k; ++i) {
      a.push_back(Vector::NullaryExpr(2, [&] { return rng.uniform(-1, 1); }));
      b.push_back(Vector::NullaryExpr(2, [&] { return rng.uniform(-1, 1); }));
    }
    w.back() = 1.0 - std::accumulate(w.begin(), w.end() - 1, 0.0);
    const SphericalMixture ta(a, w, 1.0), tb(b, w, 1.0);
    const auto m = match_components(ta, tb);

    std::vector<int> p(static_cast<std::size_t>(k));
    std::iota(p.begin(), p.end(), 0);
    double best = 1e300;
    do {
      double c = 0.0;
      for (int i = 0; i < k; ++i) c += (a[i] - b[p[i]]).norm();
      best = std::min(best, c);
    } while (std::next_permutation(p.begin(), p.end()));
    CHECK_THAT(m.total_cost, WithinAbs(best, 1e-12));

    Eigen::MatrixXd cost(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) cost(i, j) = (a[i] - b[j]).norm();
    const auto h = detail::hungarian(cost);
    double hc = 0.0;
    for (int i = 0; i < k; ++i) hc += cost(i, h[i]);
    CHECK_THAT(hc, WithinAbs(best, 1e-12));

    // relabeling the estimate leaves the optimal cost unchanged
    std::vector<Vector> br(b.rbegin(), b.rend());
    std::vector<double> wr(w.rbegin(), w.rend());
    CHECK_THAT(match_components(ta, SphericalMixture(br, wr, 1.0)).total_cost, WithinAbs(best, 1e-12));
  }
}

TEST_CASE("declared d_min is respected by valid instances") {
  const SphericalMixture m({v1(0), v1(0.5), v1(2)}, {0.2, 0.3, 0.5}, 1.0, {0.1, 0.5});
  CHECK(m.separation() >= m.constraints().d_min);
}

TEST_CASE("signed mixture arithmetic") {
  const SphericalMixture p({v1(0), v1(1)}, {0.4, 0.6}, 0.5);
  const auto f = SignedMixture::from(p);
  const auto d = f - f;
  CHECK(d.size() == 4);
  CHECK(d.weights()(2) == -0.4);
  CHECK_THAT(d.density(v1(0.3)), WithinAbs(0.0, 1e-15));
  CHECK_THAT(f.density(v1(0.3)), WithinAbs(p.density(v1(0.3)), 1e-15));
  CHECK_THROWS_AS(SignedMixture(RowMatrix::Zero(1, 1), Vector::Ones(1), Vector::Zero(1)), Error);
}
