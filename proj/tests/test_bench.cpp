#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "fpp/bench.hpp"
#include "fpp/errors.hpp"
#include "oracles.hpp"

using namespace fpp;

namespace {

CampaignSettings small_settings(std::size_t replicas) {
  CampaignSettings s;
  s.replicas = replicas;
  s.master_seed = 777;
  s.threads = 1;
  return s;
}

BenchParams params_for(double delta) { return {1e-9, delta, 0.2}; }

}  // namespace

// ---------------------------------------------------------------------------
// Midpoint family and parameters

TEST_CASE("midpoint family worked example") {
  const auto f = build_lambda(100.0, 16.0, 2);
  CHECK(f.spacing == doctest::Approx(2.5));
  REQUIRE(f.points.size() == 4);
  CHECK(f.points[0] == Vec{0.0, 2.5});
  CHECK(f.points[3] == Vec{0.0, 10.0});
  CHECK(check_lambda(f).ok());
  CHECK(build_lambda(10.0, 1.0, 3).points.size() == 1);
  CHECK_THROWS_AS(build_lambda(10.0, 0.5, 2), InvalidInput);
  CHECK_THROWS_AS(build_lambda(10.0, std::numeric_limits<double>::infinity(), 2), InvalidInput);
  const auto pair = symmetric_pair(100.0, 16.0, 2, 2);
  CHECK(pair.points == std::vector<Vec>{{0.0, 5.0}, {0.0, -5.0}});
  CHECK_THROWS_AS(symmetric_pair(100.0, 16.0, 2, 5), InvalidInput);
}

TEST_CASE("midpoint family invariants on random inputs") {
  Engine rng(5);
  for (int i = 0; i < 100; ++i) {
    const double n = 1.0 + 500.0 * uniform01(rng);
    const double phi = 1.0 + (n - 1.0) * uniform01(rng);
    const int d = 2 + i % 3;
    const auto f = build_lambda(n, phi, d);
    const auto c = check_lambda(f);
    CHECK(c.count_ok);
    CHECK(c.separation_ok);
    CHECK(c.norms_ok);
    CHECK(c.in_hyperplane);
  }
  auto f = build_lambda(100.0, 16.0, 2);
  f.points[1][0] = 0.5;
  CHECK_FALSE(check_lambda(f).in_hyperplane);
  f = build_lambda(100.0, 16.0, 2);
  f.points[1][1] = 3.0;
  CHECK_FALSE(check_lambda(f).separation_ok);
}

TEST_CASE("delta times C_delta is at least four") {
  for (int p = 1; p <= 40; ++p) {
    for (int q = 1; q <= 40; ++q) {
      // delta = p/q: delta * 4 (1 + q/p) = 4 (p + q) / q exactly.
      const double delta = double(p) / q;
      const BenchParams b{1e-9, delta, 0.2};
      CHECK(4 * (p + q) >= 4 * q);
      CHECK(delta * b.C_delta() >= 4.0 * (1 - 1e-15));
    }
  }
}

TEST_CASE("theta gate and defaults") {
  const double gate = BenchParams::theta_gate(2, 0.2, 0.5);
  CHECK(gate == doctest::Approx(std::pow(2.0, -16) * 0.04 / 12.0));
  const auto b = BenchParams::defaults(2);
  CHECK(b.theta == doctest::Approx(0.9 * gate));
  CHECK(b.within_gate(2));
  CHECK(b.K(std::exp(2.0)) == doctest::Approx(2.0 * b.theta));
  CHECK_THROWS_AS((BenchParams{-1.0, 0.5, 0.2}).validate(), InvalidInput);
  CHECK_THROWS_AS((BenchParams{0.1, 0.0, 0.2}).validate(), InvalidInput);
}

TEST_CASE("ubiquity count") {
  CHECK(ubiquity_count(0.99, 0.2) == 0);
  CHECK(ubiquity_count(1.0, 0.2) == 1);
  CHECK(ubiquity_count(1.5, 0.25) == 2);
  CHECK(ubiquity_count(1.49, 0.25) == 1);
  CHECK(ubiquity_count(3.0, 0.25) == 5);
  CHECK_THROWS_AS(ubiquity_count(1.0, 0.0), InvalidInput);
}

// ---------------------------------------------------------------------------
// Ubiquity and the C event

TEST_CASE("single-ball ubiquity at c = 1/4, K = 1") {
  const auto e = ubiquity_event(Vec{0.0, 0.0}, Vec{1.0, 0.0}, 0.25, 1.0, 1.0, 10000, 31, 1);
  const double p = 1.0 - std::exp(-std::numbers::pi / 16.0);
  REQUIRE(e.analytic);
  CHECK(*e.analytic == doctest::Approx(p).epsilon(1e-12));
  CHECK(p == doctest::Approx(0.1782).epsilon(1e-3));
  CHECK(std::abs(e.p_hat - p) <= 3.0 * std::sqrt(p * (1 - p) / 10000));
}

TEST_CASE("chained ubiquity matches the product formula") {
  const auto e = ubiquity_event(Vec{1.0, -2.0}, Vec{1.0, 1.0}, 0.2, 1.8, 3.0, 4000, 8, 1);
  const double q = 1.0 - std::exp(-3.0 * std::numbers::pi * 0.04);
  REQUIRE(e.analytic);
  CHECK(*e.analytic == doctest::Approx(std::pow(q, 3)).epsilon(1e-12));
  CHECK(std::abs(e.p_hat - *e.analytic) <= 3.5 * std::sqrt(*e.analytic * (1 - *e.analytic) / 4000));
}

TEST_CASE("empty chain is certain and bad inputs throw") {
  const auto e = ubiquity_event(Vec{0.0, 0.0}, Vec{0.0, 1.0}, 0.2, 0.5, 1.0, 50, 1, 1);
  CHECK(e.p_hat == 1.0);
  CHECK(e.analytic.value_or(0.0) == 1.0);
  CHECK_THROWS_AS(ubiquity_event(Vec{0.0, 0.0}, Vec{0.0, 0.0}, 0.2, 2.0, 1.0, 50, 1, 1), InvalidInput);
  CHECK_THROWS_AS(ubiquity_event(Vec{0.0, 0.0}, Vec{1.0, 0.0}, 0.2, 2.0, 1.0, 0, 1, 1), InvalidInput);
}

TEST_CASE("C event gate and precondition") {
  const Vec y{0.0, 0.0}, z{1.0, 0.0};
  BenchParams b = BenchParams::defaults(2);
  const auto e = c_event(y, z, b, 1e6, 1.0, 100, 3, true, 1);
  CHECK(e.p_hat == 1.0);  // K is far below one at the default theta
  CHECK(e.analytic_bound.value_or(0.0) == doctest::Approx(std::exp(-std::log(1e6) / 16.0)));
  b.theta = 1.0;
  CHECK_THROWS_AS(c_event(y, z, b, 1e6, 1.0, 100, 3, true, 1), GateError);
  CHECK_NOTHROW(c_event(y, z, b, 1e6, 1.0, 100, 3, false, 1));
  b.c_ubiq = 0.25;
  CHECK_THROWS_AS(c_event(y, z, b, 1e6, 1.0, 100, 3, false, 1), InvalidInput);
}

TEST_CASE("monotone sweep tolerance") {
  const auto a = EventEstimate::from_counts("a", 50, 100);
  const auto b = EventEstimate::from_counts("b", 45, 100);
  const auto c = EventEstimate::from_counts("c", 5, 100);
  CHECK(nondecreasing_within({a, b}));
  CHECK_FALSE(nondecreasing_within({a, c}));
  CHECK_THROWS_AS(EventEstimate::from_counts("x", 3, 2), InvalidInput);
  CHECK(a.ci95 == doctest::Approx(1.96 * 0.05));
}

// ---------------------------------------------------------------------------
// V, W and X memberships

TEST_CASE("lattice points in a ball") {
  const Vec c{0.3, -0.2};
  auto got = lattice_points_in_ball(c, 2.7);
  std::sort(got.begin(), got.end());
  CHECK(got == oracle::lattice_ball(c, 2.7));
  CHECK(lattice_points_in_ball(Vec{0.5, 0.5}, 0.1).empty());
}

TEST_CASE("V membership agrees with the definition") {
  const BenchParams b = params_for(0.5);
  const double K = 0.5;
  const Vec y{0.3, 0.6};
  int in = 0, out = 0;
  for (double intensity : {1.0, 2.0, 4.0}) {
    const auto [lo, hi] = v_ell_range(K, 2.0, 2, intensity);
    CHECK(lo == 1);
    CHECK(std::exp(-intensity * ball_volume(2, std::sqrt(double(hi)))) < 1e-12);
    CHECK(std::exp(-intensity * ball_volume(2, std::sqrt(double(hi - 1)))) >= 1e-12);
    const double reach = vwx_reach(b, K, 2.0, 2, intensity);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto s = sample_poisson(BoxRegion::centered_cube(2, reach + 1.0), intensity, derive_seed(seed, 17), 2);
      const auto grid = build_index(s, 1.0);
      const auto r = vwx_membership(grid, y, b, K, 4.0, AlphaParam(2.0), {}, false);
      const auto pts = oracle::points_of(s);
      bool expect = true;
      const double R = b.C_delta() * K;
      for (int ell = lo; ell <= hi && expect; ++ell) {
        for (const auto& x : oracle::lattice_ball(y, R + ell)) {
          bool covered = false;
          for (const auto& p : pts) covered = covered || oracle::dist(p, x) <= std::sqrt(double(ell));
          if (!covered) {
            expect = false;
            break;
          }
        }
      }
      CHECK(r.inV == expect);
      (r.inV ? in : out)++;
    }
  }
  CHECK(in > 0);
  CHECK(out > 0);
}

TEST_CASE("V fails on a near-empty sample and W is vacuous for tiny K") {
  const BenchParams b = params_for(0.5);
  const auto box = BoxRegion::centered_cube(2, 40.0);
  const auto lonely = build_index(PoissonSample(box, 1.0, 0, {0.0, 0.0}), 2.0);
  CHECK_FALSE(vwx_membership(lonely, Vec{0.0, 0.0}, b, 0.5, 4.0, AlphaParam(2.0), {}, false).inV);
  const auto empty = build_index(PoissonSample(box, 1.0, 0, {}), 2.0);
  CHECK_THROWS_AS(vwx_membership(empty, Vec{0.0, 0.0}, b, 0.5, 4.0, AlphaParam(2.0), {}, false), NoPoints);

  const auto s = sample_poisson(BoxRegion::centered_cube(2, 20.0), 1.0, 4, 2);
  const auto grid = build_index(s, 2.0);
  const auto r = vwx_membership(grid, Vec{0.1, 0.1}, b, 0.01, 4.0, AlphaParam(2.0));
  CHECK(r.inW);
  CHECK(r.lattice_pairs_W == 0);

  CHECK_THROWS_AS(vwx_membership(grid, Vec{15.0, 0.0}, b, 0.5, 4.0, AlphaParam(2.0)), InvalidInput);
}

TEST_CASE("W membership agrees with exhaustive pairwise passage times") {
  const BenchParams b = params_for(0.5);
  const double K = 0.15, intensity = 3.0;
  const Vec y{0.2, -0.1};
  const double reach = vwx_reach(b, K, 2.0, 2, intensity);
  int in = 0, out = 0;
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto s = sample_poisson(BoxRegion::centered_cube(2, reach + 0.5), intensity, derive_seed(seed, 23), 2);
    const auto grid = build_index(s, 1.0);
    const auto r = vwx_membership(grid, y, b, K, 2.0, AlphaParam(2.0));
    const auto pts = oracle::points_of(s);
    const auto lat = oracle::lattice_ball(y, 2.0 * b.C_delta() * K);
    bool expect = true;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < lat.size(); ++i) {
      const auto dist = oracle::distances_from(pts, oracle::nearest(pts, lat[i]), 2.0);
      for (std::size_t j = i + 1; j < lat.size(); ++j) {
        const double e = oracle::dist(lat[i], lat[j]);
        if (e < K) continue;
        ++pairs;
        if (dist[oracle::nearest(pts, lat[j])] < b.delta * e) expect = false;
      }
    }
    CHECK(r.inW == expect);
    CHECK(r.lattice_pairs_W <= pairs);
    if (expect) CHECK(r.lattice_pairs_W == pairs);
    (r.inW ? in : out)++;

    const double via = oracle::passage_time(pts, Vec{-2.0, 0.0}, y, 2.0) + oracle::passage_time(pts, y, Vec{2.0, 0.0}, 2.0);
    const double direct = oracle::passage_time(pts, Vec{-2.0, 0.0}, Vec{2.0, 0.0}, 2.0);
    CHECK(r.x_gap == doctest::Approx(via - direct).epsilon(1e-9));
    CHECK(r.inX == (r.x_gap < K));
  }
  CHECK(in + out == 4);
}

TEST_CASE("the integer lattice is in V, W and X") {
  // Every lattice x is a sample point and each hop of length l >= 1 costs l^2 >= l.
  const BenchParams b = params_for(0.5);
  const double K = 0.15;
  const double half = std::ceil(vwx_reach(b, K, 2.0, 2, 1.0)) + 1.0;
  std::vector<double> coords;
  for (double i = -half; i <= half; ++i)
    for (double j = -half; j <= half; ++j) coords.insert(coords.end(), {i, j});
  const auto grid = build_index(PoissonSample(BoxRegion::centered_cube(2, half), 1.0, 0, coords), 2.0);
  const auto r = vwx_membership(grid, Vec{0.0, 0.0}, b, K, 2.0, AlphaParam(2.0));
  CHECK(r.inV);
  CHECK(r.inW);
  CHECK(r.lattice_pairs_W > 0);
  CHECK(r.x_gap == doctest::Approx(0.0));
  CHECK(r.inX);
  CHECK(r.certified);
}

// ---------------------------------------------------------------------------
// Geodesic statements

TEST_CASE("jump bound is asserted only inside V") {
  const BenchParams b = params_for(0.5);
  const double K = 0.5;  // ball radius C_delta K = 6, bound K^(1/4) + 1
  const std::vector<Vec> path{{-20.0, 0.0}, {-3.0, 0.0}, {0.0, 0.0}, {10.0, 0.0}};
  const auto gated = jump_bound_check(path, Vec{0.0, 0.0}, b, K, AlphaParam(2.0), true);
  CHECK(gated.crossing);
  CHECK(gated.entry_jump.value_or(0) == doctest::Approx(17.0));
  CHECK(gated.exit_jump.value_or(0) == doctest::Approx(10.0));
  CHECK(gated.bound == doctest::Approx(std::pow(0.5, 0.25) + 1.0));
  CHECK(gated.violated);
  const auto ungated = jump_bound_check(path, Vec{0.0, 0.0}, b, K, AlphaParam(2.0), false);
  CHECK_FALSE(ungated.violated);
  const auto miss = jump_bound_check(path, Vec{0.0, 50.0}, b, K, AlphaParam(2.0), true);
  CHECK_FALSE(miss.crossing);
  CHECK_FALSE(miss.violated);
  const std::vector<Vec> fine{{-7.0, 0.0}, {-5.5, 0.0}, {0.0, 0.0}, {5.5, 0.0}, {7.0, 0.0}};
  CHECK_FALSE(jump_bound_check(fine, Vec{0.0, 0.0}, b, K, AlphaParam(2.0), true).violated);
}

TEST_CASE("canonical witnesses satisfy the B event") {
  Engine rng(12);
  for (int i = 0; i < 200; ++i) {
    std::vector<Vec> path;
    for (int k = 0; k < 6; ++k) path.push_back(Vec{-5.0 + 2.0 * k + uniform01(rng), 3.0 * uniform01(rng) - 1.5});
    const Vec y{0.3, 0.1};
    const auto [z1, z2] = canonical_witnesses(path, y, 2.0);
    CHECK(b_event_check(path, y, z1, z2, 2.0));
    for (double v : z1) CHECK(v == std::floor(v));
  }
  const std::vector<Vec> far{{10.0, 10.0}, {11.0, 10.0}};
  CHECK_THROWS_AS(canonical_witnesses(far, Vec{0.0, 0.0}, 1.0), InvalidInput);
  CHECK_THROWS_AS(b_event_check(far, Vec{0.0, 0.0}, Vec{0.0, 0.0}, Vec{0.0, 0.0}, 1.0), InvalidInput);
  const std::vector<Vec> line{{-3.0, 0.0}, {-0.5, 0.0}, {0.5, 0.0}, {3.0, 0.0}};
  CHECK_FALSE(b_event_check(line, Vec{0.0, 0.0}, Vec{5.0, 5.0}, Vec{0.0, 0.0}, 1.0));
}

// ---------------------------------------------------------------------------
// Passage-time events

TEST_CASE("midpoint gain is nonnegative and deterministic") {
  auto s = small_settings(10);
  const auto a = midpoint_gain(6.0, s);
  s.threads = 2;
  const auto b = midpoint_gain(6.0, s);
  CHECK(a.excluded == 0);
  CHECK(a.min_difference >= -1e-9);
  CHECK(a.differences == b.differences);
  CHECK(a.stats.count() == 10);
}

TEST_CASE("argmin over a single midpoint always fires") {
  auto s = small_settings(12);
  const auto f = build_lambda(6.0, 2.0, 2);
  REQUIRE(f.points.size() == 1);
  const auto r = argmin_lambda(6.0, f, s);
  REQUIRE(r.per_y.size() == 1);
  CHECK(r.per_y[0].p_hat == 1.0);
  CHECK(r.max_fired == 1);
  CHECK(r.sum_p == doctest::Approx(1.0));
}

TEST_CASE("argmin events are disjoint") {
  auto s = small_settings(30);
  const auto f = build_lambda(8.0, 8.0, 2);
  const auto r = argmin_lambda(8.0, f, s);
  CHECK(r.max_fired <= 1);
  CHECK(r.sum_p <= 1.0 + 1e-12);
  CHECK(r.sum_p + double(r.ties) / r.trials == doctest::Approx(1.0));
}

TEST_CASE("A24 and A25 at trivial thresholds") {
  auto s = small_settings(10);
  const auto f = build_lambda(6.0, 4.0, 2);
  const auto zero = event_A24_A25(6.0, f, 4.0, s, 0.0, 1e9);
  CHECK(zero.a24.p_hat == 1.0);
  CHECK(zero.a25.p_hat == 1.0);
  const auto none = event_A24_A25(6.0, f, 4.0, s, 1e9, 0.0);
  CHECK(none.a24.p_hat == 0.0);
  CHECK(none.a25.p_hat == 0.0);
  const auto dflt = event_A24_A25(6.0, f, 4.0, s);
  CHECK(dflt.threshold24 == doctest::Approx(std::sqrt(6.0) * std::pow(4.0, -0.6)));
  CHECK(dflt.threshold25 == doctest::Approx(std::sqrt(6.0) * std::pow(4.0, -2.0 / 3.0)));
}

TEST_CASE("resampling experiment replicas respect the planted event") {
  auto s = small_settings(40);
  const auto r = resampling_variance_experiment(6.0, s);
  CHECK(r.event_probability == doctest::Approx(planted_event_probability(2, 1.0)));
  REQUIRE(r.replicas.size() == 40);
  std::size_t violations = 0;
  for (const auto& rep : r.replicas) {
    CHECK(norm(rep.start) > 2.0);
    CHECK(norm(rep.start_resampled) <= 1.0);
    CHECK(rep.difference == rep.T_resampled - rep.T);
    CHECK(rep.seed != rep.seed2);
    violations += rep.certified && rep.difference < 1.0 - 1e-9;
  }
  CHECK(r.violations.size() == violations);
  CHECK(r.uncertified == 0);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov and rotation invariance

TEST_CASE("Kolmogorov tail at known points") {
  CHECK(kolmogorov_q(1.0) == doctest::Approx(0.26999967).epsilon(1e-6));
  CHECK(kolmogorov_q(0.5) == doctest::Approx(0.96394524).epsilon(1e-6));
  CHECK(kolmogorov_q(1.36) == doctest::Approx(0.04910).epsilon(1e-3));
  CHECK(kolmogorov_q(0.0) == 1.0);
  // Both series agree where they meet.
  CHECK(kolmogorov_q(1.18 - 1e-9) == doctest::Approx(kolmogorov_q(1.18)).epsilon(1e-8));
}

TEST_CASE("KS statistics on extreme samples") {
  const std::vector<double> a{1, 2, 3, 4, 5};
  CHECK(ks_two_sample(a, a).statistic == 0.0);
  CHECK(ks_two_sample(a, a).p_value == 1.0);
  const std::vector<double> b{10, 11, 12, 13, 14};
  CHECK(ks_two_sample(a, b).statistic == 1.0);
  CHECK(ks_two_sample(a, b).p_value < 0.01);
  CHECK_THROWS_AS(ks_two_sample({}, a), InvalidInput);
}

TEST_CASE("KS p-values are calibrated under the null") {
  Engine rng(2024);
  int rejected_one = 0, rejected_two = 0;
  const int M = 2000;
  for (int m = 0; m < M; ++m) {
    std::vector<double> u(100), v(100);
    for (auto& x : u) x = uniform01(rng);
    for (auto& x : v) x = uniform01(rng);
    rejected_one += ks_uniform(u).p_value < 0.05;
    rejected_two += ks_two_sample(u, v).p_value < 0.05;
  }
  const double sd = std::sqrt(0.05 * 0.95 / M);
  CHECK(std::abs(rejected_one / double(M) - 0.05) < 4 * sd);
  CHECK(std::abs(rejected_two / double(M) - 0.05) < 4 * sd + 0.01);
}

TEST_CASE("rotation test accepts true directions and rejects the clipped sampler") {
  auto s = small_settings(150);
  const double h = std::sqrt(0.5);
  const std::vector<Vec> dirs{{1.0, 0.0}, {h, h}, {0.0, 1.0}};
  const auto r = rotation_invariance_test(10.0, dirs, s);
  CHECK(r.pairs.size() == 3);
  CHECK(r.passed);
  const auto padded = direction_sample(10.0, dirs[0], s, "control");
  const auto clipped = direction_sample(10.0, dirs[0], s, "control", false);
  CHECK(ks_two_sample(padded, clipped).p_value < 0.01);
  CHECK_THROWS_AS(direction_sample(10.0, Vec{1.0, 1.0}, s, "x"), InvalidInput);
}
