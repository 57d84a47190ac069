#include <catch_amalgamated.hpp>

#include <filesystem>

#include "gmmgrid/io.hpp"

using namespace gmmgrid;

TEST_CASE("mixture JSON round trip is exact") {
  const SphericalMixture m({(Vector(2) << 0.1, -1.0 / 3.0).finished(), (Vector(2) << 2.5, 1e-17).finished()},
                           {0.3, 0.7}, 0.2);
  const auto back = io::spherical_from_json(Json::parse(io::to_json(m).dump()));
  CHECK(back.means() == m.means());
  CHECK(back.weights() == m.weights());
  CHECK(back.sigma() == m.sigma());

  SignedMixture f(1);
  f.add(-0.25, Vector::Constant(1, 0.5), 0.3);
  f.add(1.0, Vector::Constant(1, -2.0), 1.7);
  const auto g = io::signed_from_json(Json::parse(io::to_json(f).dump()));
  CHECK(g.means() == f.means());
  CHECK(g.weights() == f.weights());
  CHECK(g.sigmas() == f.sigmas());
}

TEST_CASE("KDE and basis round trips") {
  const SphericalMixture p({Vector::Zero(3)}, {1.0}, 1.0);
  const auto kde = build_kde(sample(p, 50, 1));
  const auto k2 = io::kde_from_json(io::to_json(kde));
  CHECK(k2.bandwidth == kde.bandwidth);
  CHECK(k2.source_n == 50);
  CHECK(k2.mixture.means() == kde.mixture.means());

  const auto b = fit_basis(sample(p, 200, 2), 2);
  const auto b2 = io::basis_from_json(io::to_json(b));
  CHECK(b2.vectors == b.vectors);
  CHECK(b2.singular_values == b.singular_values);
}

TEST_CASE("malformed JSON reports an error") {
  CHECK_THROWS_AS(io::spherical_from_json(Json{{"sigma", 1.0}}), Error);
  CHECK_THROWS_AS(io::basis_from_json(Json{{"k", 2}, {"dim", 3}, {"vectors", Json::array()}}), Error);
}

TEST_CASE("CSV round trip is bit exact") {
  const SphericalMixture p({Vector::Zero(3)}, {1.0}, 1.0);
  const auto s = sample(p, 100, 3);
  const auto text = io::to_csv(s);
  CHECK(text.substr(0, text.find('\n')) == "x0,x1,x2");
  const auto back = io::samples_from_csv(text);
  CHECK(back.data == s.data);
}

TEST_CASE("CSV parsing tolerates CRLF and blank lines and rejects bad rows") {
  const auto s = io::samples_from_csv("a,b\r\n1,2\r\n\r\n3, 4\n");
  CHECK(s.size() == 2);
  CHECK(s.data(1, 1) == 4.0);
  CHECK_THROWS_WITH(io::samples_from_csv("a,b\n1,2\n3\n"), Catch::Matchers::ContainsSubstring("line 3"));
  CHECK_THROWS_WITH(io::samples_from_csv("a\nfoo\n"), Catch::Matchers::ContainsSubstring("foo"));
  CHECK_THROWS_AS(io::samples_from_csv("a,b\n"), Error);
}

TEST_CASE("NDJSON writes one array per line") {
  SampleMatrix s{RowMatrix(2, 2), 0};
  s.data << 1.5, -2, 0.25, 3;
  CHECK(io::to_ndjson(s) == "[1.5,-2]\n[0.25,3]\n");
}

TEST_CASE("file helpers") {
  const auto dir = std::filesystem::temp_directory_path() / "gmmgrid_test_io";
  std::filesystem::create_directories(dir);
  const Json j = {{"a", 1}, {"b", {1.5, 2.5}}};
  io::write_json(dir / "x.json", j);
  CHECK(io::read_json(dir / "x.json") == j);
  CHECK_THROWS_AS(io::read_file(dir / "missing.json"), Error);
  io::write_file(dir / "bad.json", "{not json");
  CHECK_THROWS_AS(io::read_json(dir / "bad.json"), Error);
  std::filesystem::remove_all(dir);
}
