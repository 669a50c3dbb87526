#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "fpp/errors.hpp"
#include "fpp/geodesic.hpp"
#include "fpp/point_process.hpp"
#include "fpp/spatial_grid.hpp"
#include "oracles.hpp"

using namespace fpp;

namespace {

SpatialGrid grid_of(const BoxRegion& box, std::vector<double> coords, double cell = 1.0) {
  return build_index(PoissonSample(box, 1.0, 0, std::move(coords)), cell);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("alpha parameter") {
  CHECK_THROWS_AS(AlphaParam(1.0), InvalidInput);
  CHECK_THROWS_AS(AlphaParam(std::nan("")), InvalidInput);
  const AlphaParam a(3.0);
  CHECK(a.cost_from_squared(4.0) == doctest::Approx(8.0));
  CHECK(edge_cost(Vec{0.0, 0.0}, Vec{3.0, 4.0}, AlphaParam(2.0)) == doctest::Approx(25.0));
}

TEST_CASE("a straight line of points costs the sum of edge powers") {
  const BoxRegion box({-1.0, -1.0}, {5.0, 1.0});
  const auto g = grid_of(box, {0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 4.0, 0.0});
  const auto r = passage_time(g, Vec{0.0, 0.0}, Vec{4.0, 0.0}, AlphaParam(2.0));
  CHECK(r.cost == doctest::Approx(4.0));
  CHECK(r.path.size() == 5);
  CHECK(r.certified);
  CHECK(path_cost(r.path, AlphaParam(2.0)) == doctest::Approx(r.cost));
}

TEST_CASE("matches the O(N^2) Dijkstra oracle on Poisson samples") {
  for (double alpha : {1.5, 2.0, 3.0}) {
    const AlphaParam a(alpha);
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
      const auto box = BoxRegion::centered_cube(2, 6.0);
      const auto s = sample_poisson(box, 1.0, derive_seed(alpha * 10, seed), 2);
      const auto g = build_index(s, 2.0);
      const Vec x{-4.0, 0.5}, y{4.0, -0.5};
      const auto r = passage_time(g, x, y, a);
      REQUIRE(r.certified);
      CHECK(rel_err(r.cost, oracle::passage_time(oracle::points_of(s), x, y, alpha)) < 1e-9);
      CHECK(audit_local_optimality(r, g, a).empty());
    }
  }
}

TEST_CASE("cutoff search agrees with the complete graph on small instances") {
  int checked = 0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    Engine rng(derive_seed(99, k));
    const double alpha = k % 2 ? 1.5 : 2.0;
    const auto box = BoxRegion::centered_cube(2, 3.0);
    const auto s = sample_poisson(box, 1.0, derive_seed(100, k), 2);
    if (s.size() < 2) continue;
    const auto g = build_index(s, 1.0);
    const Vec x{-3.0 + 6.0 * uniform01(rng), -3.0 + 6.0 * uniform01(rng)};
    const Vec y{-3.0 + 6.0 * uniform01(rng), -3.0 + 6.0 * uniform01(rng)};
    GeodesicOptions opts;
    opts.exact_threshold = 0;
    const auto r = passage_time(g, x, y, AlphaParam(alpha), opts);
    const auto pts = oracle::points_of(s);
    const auto bf = brute_force_passage_time(pts, x, y, AlphaParam(alpha));
    CHECK(r.certified);
    CHECK(rel_err(r.cost, bf.cost) < 1e-9);
    ++checked;
  }
  CHECK(checked > 150);
}

TEST_CASE("brute-force oracle refuses large inputs") {
  std::vector<Vec> pts;
  for (int i = 0; i < 65; ++i) pts.push_back(Vec{double(i), 0.0});
  CHECK_THROWS_AS(brute_force_passage_time(pts, Vec{0.0, 0.0}, Vec{1.0, 0.0}, AlphaParam(2.0)), Refused);
  pts.pop_back();
  CHECK(brute_force_passage_time(pts, Vec{0.0, 0.0}, Vec{63.0, 0.0}, AlphaParam(2.0)).cost == doctest::Approx(63.0));
}

TEST_CASE("points with the same nearest neighbour are at passage time zero") {
  const auto s = sample_poisson(BoxRegion::centered_cube(2, 4.0), 1.0, 5, 2);
  const auto g = build_index(s, 1.0);
  const Vec p = s.point_vec(0);
  Vec q = p;
  q[0] += 1e-9;
  const auto r = passage_time(g, p, q, AlphaParam(2.0));
  CHECK(r.cost == 0.0);
  CHECK(r.path.size() == 1);
}

TEST_CASE("empty sample throws NoPoints") {
  const auto g = grid_of(BoxRegion::centered_cube(2, 1.0), {});
  CHECK_THROWS_AS(passage_time(g, Vec{0.0, 0.0}, Vec{0.5, 0.0}, AlphaParam(2.0)), NoPoints);
}

TEST_CASE("symmetry, subadditivity and monotonicity under insertion") {
  const AlphaParam a(2.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto box = BoxRegion::centered_cube(2, 8.0);
    const auto s = sample_poisson(box, 1.0, derive_seed(3, seed), 2);
    const auto g = build_index(s, 2.0);
    Engine rng(seed);
    auto pick = [&] { return Vec{-6.0 + 12.0 * uniform01(rng), -6.0 + 12.0 * uniform01(rng)}; };
    const Vec x = pick(), y = pick(), z = pick();
    const double xy = passage_time(g, x, y, a).cost;
    CHECK(rel_err(passage_time(g, y, x, a).cost, xy) < 1e-12);
    const double via = passage_time(g, x, z, a).cost + passage_time(g, z, y, a).cost;
    CHECK(xy <= via * (1 + 1e-12));
    CHECK(rel_err(passage_time_via(g, x, z, y, a), via) < 1e-12);

    // A point far from both endpoints cannot lower T when D(x), D(y) are unchanged.
    auto coords = s.coords();
    coords.push_back(7.9);
    coords.push_back(7.9);
    const auto g2 = build_index(PoissonSample(box, 1.0, 0, coords), 2.0);
    if (nearest(g2, x) == nearest(g, x) && nearest(g2, y) == nearest(g, y)) {
      CHECK(passage_time(g2, x, y, a).cost <= xy * (1 + 1e-12));
    }
  }
}

TEST_CASE("local-optimality audit catches a non-geodesic path") {
  const BoxRegion box({-1.0, -1.0}, {3.0, 1.0});
  const auto g = grid_of(box, {0.0, 0.0, 1.0, 0.0, 2.0, 0.0});
  const AlphaParam a(2.0);
  const std::vector<Vec> shortcut{{0.0, 0.0}, {2.0, 0.0}};
  const auto v = audit_local_optimality(shortcut, g, a);
  REQUIRE(v.size() == 1);
  CHECK(v[0].edge == 0);
  CHECK(v[0].witness == Vec{1.0, 0.0});
  CHECK(v[0].direct_cost == doctest::Approx(4.0));
  CHECK(v[0].detour_cost == doctest::Approx(2.0));
  const std::vector<Vec> good{{0.0, 0.0}, {1.0, 0.0}, {2.0, 0.0}};
  CHECK(audit_local_optimality(good, g, a).empty());
}

TEST_CASE("a capped cutoff that never stabilizes is reported uncertified") {
  std::vector<double> coords;
  for (int i = 0; i <= 16; ++i) coords.insert(coords.end(), {double(i), 0.0});
  const auto g = grid_of(BoxRegion({-1.0, -1.0}, {17.0, 1.0}), coords);
  GeodesicOptions opts;
  opts.exact_threshold = 0;
  opts.initial_cutoff = 1.5;
  opts.max_cutoff = 2.0;
  const auto r = passage_time(g, Vec{0.0, 0.0}, Vec{16.0, 0.0}, AlphaParam(2.0), opts);
  CHECK_FALSE(r.certified);
  CHECK(r.cost == doctest::Approx(16.0));
  opts.max_cutoff = std::numeric_limits<double>::infinity();
  CHECK(passage_time(g, Vec{0.0, 0.0}, Vec{16.0, 0.0}, AlphaParam(2.0), opts).certified);
}

TEST_CASE("multi-target search agrees with single searches") {
  const auto s = sample_poisson(BoxRegion::centered_cube(2, 8.0), 1.0, 12, 2);
  const auto g = build_index(s, 2.0);
  const AlphaParam a(2.0);
  const std::vector<Vec> targets{{-6.0, 0.0}, {6.0, 1.0}, {0.0, 5.0}};
  const auto many = passage_times_from(g, Vec{0.0, 0.0}, targets, a);
  REQUIRE(many.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(many[i].certified);
    CHECK(rel_err(many[i].cost, passage_time(g, Vec{0.0, 0.0}, targets[i], a).cost) < 1e-12);
  }
}

TEST_CASE("concatenated path lists the midpoint once") {
  const BoxRegion box({-1.0, -1.0}, {5.0, 1.0});
  const auto g = grid_of(box, {0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0, 4.0, 0.0});
  const auto v = geodesic_via(g, Vec{0.0, 0.0}, Vec{2.0, 0.0}, Vec{4.0, 0.0}, AlphaParam(2.0));
  CHECK(v.certified());
  CHECK(v.cost == doctest::Approx(4.0));
  CHECK(v.path().size() == 5);
}

TEST_CASE("jump length and ball crossings") {
  const std::vector<Vec> path{{0.0, 0.0}, {1.0, 0.0}, {4.0, 0.0}, {4.0, 1.0}};
  CHECK(max_jump(path) == doctest::Approx(3.0));
  CHECK(max_jump(std::vector<Vec>{{1.0, 1.0}}) == 0.0);
  const auto c = ball_crossing(path, Vec{2.0, 0.0}, 2.0);
  REQUIRE(c);
  CHECK(c->first == 0);
  CHECK(c->second == 2);
  CHECK_FALSE(ball_crossing(path, Vec{10.0, 10.0}, 1.0));
}

TEST_CASE("CSV and JSON exports") {
  const BoxRegion box({-1.0, -1.0}, {3.0, 1.0});
  const auto g = grid_of(box, {0.0, 0.0, 1.0, 0.0, 2.0, 0.0});
  const auto r = passage_time(g, Vec{0.0, 0.0}, Vec{2.0, 0.0}, AlphaParam(2.0));
  std::ostringstream csv, js;
  write_geodesic_csv(csv, r);
  write_geodesic_json(js, r);
  int lines = 0;
  for (char ch : csv.str()) lines += ch == '\n';
  CHECK(lines == 1 + 3);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j.at("cost").get<double>() == doctest::Approx(2.0));
  CHECK(j.at("certified").get<bool>());
  CHECK(j.at("vertices").size() == 3);
}
