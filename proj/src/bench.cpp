#include "fpp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fpp/errors.hpp"
#include "fpp/io.hpp"
#include "fpp/parallel.hpp"
#include "fpp/seeding.hpp"

namespace fpp {

namespace {

constexpr double kVoidCutoff = 1e-12;

Vec axis_point(int dimension, int axis, double value) {
  Vec v(static_cast<std::size_t>(dimension), 0.0);
  v[static_cast<std::size_t>(axis)] = value;
  return v;
}

void require_finite_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(what) + " must be positive and finite");
}

// Geodesic D(a) -> D(y) -> D(b) from one search rooted at y.
struct ViaPath {
  double to_a = 0.0;
  double to_b = 0.0;
  bool certified = false;
  std::vector<Vec> first;   // D(a) ... D(y)
  std::vector<Vec> second;  // D(y) ... D(b)
  std::vector<Vec> path() const {
    std::vector<Vec> out = first;
    if (!second.empty()) out.insert(out.end(), second.begin() + 1, second.end());
    return out;
  }
};

ViaPath via_from_center(const SpatialGrid& grid, const Vec& a, const Vec& y, const Vec& b,
                        const AlphaParam& alpha, const GeodesicOptions& opts) {
  const std::vector<Vec> targets{a, b};
  auto res = passage_times_from(grid, y, targets, alpha, opts);
  ViaPath v;
  v.to_a = res[0].cost;
  v.to_b = res[1].cost;
  v.certified = res[0].certified && res[1].certified;
  v.first.assign(res[0].path.rbegin(), res[0].path.rend());
  v.second = std::move(res[1].path);
  return v;
}

double bench_padding(double n, const CampaignSettings& settings) {
  return settings.padding.value_or(n / 2.0);
}

}  // namespace

// ---------------------------------------------------------------------------

LambdaFamily build_lambda(double n, double phi_n, int dimension) {
  require_finite_positive(n, "build_lambda: n");
  if (!(phi_n >= 1.0) || !std::isfinite(phi_n)) {
    throw InvalidInput("build_lambda: phi_n must be finite and >= 1");
  }
  if (dimension < 2) throw InvalidInput("build_lambda: dimension must be >= 2");
  LambdaFamily f;
  f.n = n;
  f.phi_n = phi_n;
  f.spacing = std::sqrt(n / phi_n);
  const auto count = static_cast<int>(std::floor(std::sqrt(phi_n)));
  if (count < 1) throw InvalidInput("build_lambda: empty family");
  for (int k = 1; k <= count; ++k) f.points.push_back(axis_point(dimension, 1, k * f.spacing));
  return f;
}

LambdaFamily symmetric_pair(double n, double phi_n, int dimension, int k) {
  auto f = build_lambda(n, phi_n, dimension);
  if (k < 1 || static_cast<std::size_t>(k) > f.points.size()) {
    throw InvalidInput("symmetric_pair: k outside 1..floor(sqrt(phi_n))");
  }
  f.points = {axis_point(dimension, 1, k * f.spacing), axis_point(dimension, 1, -k * f.spacing)};
  return f;
}

LambdaCheck check_lambda(const LambdaFamily& f) {
  constexpr double slack = 1e-12;
  const double s = std::sqrt(f.n / f.phi_n);
  const double top = std::sqrt(f.n);
  LambdaCheck c;
  c.count_ok = f.points.size() == static_cast<std::size_t>(std::floor(std::sqrt(f.phi_n)));
  c.separation_ok = true;
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    for (std::size_t j = i + 1; j < f.points.size(); ++j) {
      if (distance(f.points[i], f.points[j]) < s * (1.0 - slack)) c.separation_ok = false;
    }
  }
  c.norms_ok = true;
  c.in_hyperplane = true;
  for (const auto& p : f.points) {
    const double r = norm(p);
    if (r < s * (1.0 - slack) || r > top * (1.0 + slack)) c.norms_ok = false;
    if (p.empty() || p[0] != 0.0) c.in_hyperplane = false;
  }
  return c;
}

double BenchParams::K(double phi_n) const {
  if (!(phi_n >= 1.0)) throw InvalidInput("BenchParams::K: phi_n must be >= 1");
  return theta * std::log(phi_n);
}

double BenchParams::theta_gate(int dimension, double c, double delta) {
  const double C = 4.0 * (1.0 + 1.0 / delta);
  return std::ldexp(std::pow(c, dimension), -8 * dimension) / C;
}

BenchParams BenchParams::defaults(int dimension) {
  BenchParams p;
  p.c_ubiq = 0.2;
  p.delta = 0.5;
  p.theta = 0.9 * theta_gate(dimension, p.c_ubiq, p.delta);
  return p;
}

void BenchParams::validate() const {
  require_finite_positive(theta, "theta");
  require_finite_positive(delta, "delta");
  require_finite_positive(c_ubiq, "c_ubiq");
}

std::size_t ubiquity_count(double K, double c) {
  if (!(c > 0.0)) throw InvalidInput("ubiquity_count: c must be positive");
  if (K < 1.0) return 0;
  return static_cast<std::size_t>(std::floor((K - 1.0) / (2.0 * c))) + 1;
}

EventEstimate EventEstimate::from_counts(std::string name, std::uint64_t hits, std::uint64_t trials) {
  if (trials == 0) throw InvalidInput("EventEstimate: zero trials");
  if (hits > trials) throw InvalidInput("EventEstimate: hits exceed trials");
  EventEstimate e;
  e.name = std::move(name);
  e.hits = hits;
  e.trials = trials;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(trials);
  e.ci95 = 1.96 * e.standard_error();
  return e;
}

double EventEstimate::standard_error() const {
  if (trials == 0) return 0.0;
  return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(trials));
}

bool nondecreasing_within(const std::vector<EventEstimate>& sweep, double k_sigma) {
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    const double a = sweep[i - 1].standard_error();
    const double b = sweep[i].standard_error();
    if (sweep[i].p_hat < sweep[i - 1].p_hat - k_sigma * std::sqrt(a * a + b * b)) return false;
  }
  return true;
}

BoxRegion bench_box(double n, const std::vector<Vec>& centers, double reach, int dimension) {
  require_finite_positive(n, "bench_box: n");
  auto box = segment_box(axis_point(dimension, 0, -n), axis_point(dimension, 0, n), n / 2.0);
  for (const auto& c : centers) {
    if (static_cast<int>(c.size()) != dimension) throw InvalidInput("bench_box: dimension mismatch");
    box = box.hull(segment_box(c, c, std::max(reach, 1e-9)));
  }
  return box;
}

// ---------------------------------------------------------------------------

MidpointGainResult midpoint_gain(double n, const CampaignSettings& settings) {
  if (settings.replicas < 2) throw InvalidInput("midpoint_gain: need at least two replicas");
  const AlphaParam alpha = settings.alpha_param();
  const int d = settings.dimension;
  const Vec left = axis_point(d, 0, -n), right = axis_point(d, 0, n), origin(static_cast<std::size_t>(d), 0.0);
  const auto box = segment_box(left, right, bench_padding(n, settings));

  auto diffs = parallel_map<double>(settings.replicas, settings.threads, [&](std::size_t r) {
    const auto seed = replica_seed(settings.master_seed, "midpoint-gain", n, r);
    SpatialGrid grid(sample_poisson(box, settings.intensity, seed, d), settings.cell_size());
    const auto via = via_from_center(grid, left, origin, right, alpha, settings.geodesic);
    const auto direct = passage_time(grid, left, right, alpha, settings.geodesic);
    if (!via.certified || !direct.certified) return std::numeric_limits<double>::quiet_NaN();
    return via.to_a + via.to_b - direct.cost;
  });

  MidpointGainResult out;
  out.min_difference = std::numeric_limits<double>::infinity();
  for (double v : diffs) {
    if (std::isnan(v)) {
      ++out.excluded;
      continue;
    }
    out.stats.push(v);
    out.min_difference = std::min(out.min_difference, v);
  }
  out.differences = std::move(diffs);
  if (static_cast<double>(out.excluded) > settings.max_exclusion_rate * static_cast<double>(settings.replicas)) {
    throw CampaignFailure("midpoint_gain: too many uncertified replicas");
  }
  return out;
}

ArgminResult argmin_lambda(double n, const LambdaFamily& lambda, const CampaignSettings& settings) {
  if (lambda.points.empty()) throw InvalidInput("argmin_lambda: empty family");
  const AlphaParam alpha = settings.alpha_param();
  const int d = settings.dimension;
  const Vec left = axis_point(d, 0, -n), right = axis_point(d, 0, n);
  const auto box = bench_box(n, lambda.points, 0.0, d).hull(segment_box(left, right, bench_padding(n, settings)));
  const std::size_t m = lambda.points.size();

  struct Outcome {
    bool certified = false;
    std::vector<double> via;
  };
  auto outcomes = parallel_map<Outcome>(settings.replicas, settings.threads, [&](std::size_t r) {
    const auto seed = replica_seed(settings.master_seed, "argmin", n, r);
    SpatialGrid grid(sample_poisson(box, settings.intensity, seed, d), settings.cell_size());
    const auto from_left = passage_times_from(grid, left, lambda.points, alpha, settings.geodesic);
    const auto from_right = passage_times_from(grid, right, lambda.points, alpha, settings.geodesic);
    Outcome o;
    o.certified = true;
    for (std::size_t i = 0; i < m; ++i) {
      o.certified = o.certified && from_left[i].certified && from_right[i].certified;
      o.via.push_back(from_left[i].cost + from_right[i].cost);
    }
    return o;
  });

  ArgminResult out;
  std::vector<std::uint64_t> hits(m, 0);
  for (const auto& o : outcomes) {
    if (!o.certified) continue;
    ++out.trials;
    std::uint64_t fired = 0;
    for (std::size_t i = 0; i < m; ++i) {
      bool strict = true;
      for (std::size_t j = 0; j < m && strict; ++j) {
        if (j != i && !(o.via[i] < o.via[j])) strict = false;
      }
      if (strict) {
        ++hits[i];
        ++fired;
      }
    }
    if (fired == 0) ++out.ties;
    out.max_fired = std::max(out.max_fired, fired);
  }
  if (out.trials == 0) throw CampaignFailure("argmin_lambda: no certified replicas");
  for (std::size_t i = 0; i < m; ++i) {
    out.per_y.push_back(EventEstimate::from_counts("A^y[" + std::to_string(i) + "]", hits[i], out.trials));
    out.sum_p += out.per_y.back().p_hat;
  }
  return out;
}

A24A25Result event_A24_A25(double n, const LambdaFamily& lambda, double phi_n,
                           const CampaignSettings& settings, std::optional<double> threshold24,
                           std::optional<double> threshold25) {
  if (!(phi_n >= 1.0)) throw InvalidInput("event_A24_A25: phi_n must be >= 1");
  const AlphaParam alpha = settings.alpha_param();
  const int d = settings.dimension;
  const Vec left = axis_point(d, 0, -n), right = axis_point(d, 0, n);
  std::vector<Vec> pts = lambda.points;
  pts.emplace_back(static_cast<std::size_t>(d), 0.0);
  const std::size_t m = pts.size();
  const auto box = bench_box(n, pts, 0.0, d).hull(segment_box(left, right, bench_padding(n, settings)));

  A24A25Result out;
  out.threshold24 = threshold24.value_or(std::sqrt(n) * std::pow(phi_n, -3.0 / 5.0));
  out.threshold25 = threshold25.value_or(std::sqrt(n) * std::pow(phi_n, -2.0 / 3.0));

  struct Outcome {
    bool certified = true;
    double min_pair = std::numeric_limits<double>::infinity();
    std::vector<double> ends;  // T(-n e1, y_i), then T(n e1, y_i)
  };
  auto outcomes = parallel_map<Outcome>(settings.replicas, settings.threads, [&](std::size_t r) {
    const auto seed = replica_seed(settings.master_seed, "a24-a25", n, r);
    SpatialGrid grid(sample_poisson(box, settings.intensity, seed, d), settings.cell_size());
    Outcome o;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      const std::vector<Vec> rest(pts.begin() + static_cast<std::ptrdiff_t>(i + 1), pts.end());
      for (const auto& g : passage_times_from(grid, pts[i], rest, alpha, settings.geodesic)) {
        o.certified = o.certified && g.certified;
        o.min_pair = std::min(o.min_pair, g.cost);
      }
    }
    for (const auto& z : {left, right}) {
      for (const auto& g : passage_times_from(grid, z, pts, alpha, settings.geodesic)) {
        o.certified = o.certified && g.certified;
        o.ends.push_back(g.cost);
      }
    }
    return o;
  });

  std::vector<StreamStats> end_stats(2 * m, StreamStats("passage-time"));
  std::uint64_t trials = 0;
  for (const auto& o : outcomes) {
    if (!o.certified) continue;
    ++trials;
    for (std::size_t k = 0; k < 2 * m; ++k) end_stats[k].push(o.ends[k]);
  }
  if (trials == 0) throw CampaignFailure("event_A24_A25: no certified replicas");

  std::uint64_t hits24 = 0, hits25 = 0;
  for (const auto& o : outcomes) {
    if (!o.certified) continue;
    hits24 += o.min_pair >= out.threshold24;
    bool ok = true;
    for (std::size_t k = 0; k < 2 * m; ++k) {
      if (std::abs(o.ends[k] - end_stats[k].mean()) > out.threshold25) ok = false;
    }
    hits25 += ok;
  }
  out.a24 = EventEstimate::from_counts("A24", hits24, trials);
  out.a25 = EventEstimate::from_counts("A25", hits25, trials);
  // Union of Chebyshev bounds over the 2|P| deviations; reported only.
  double tail = 0.0;
  for (const auto& s : end_stats) tail += s.variance() / (out.threshold25 * out.threshold25);
  out.a25.analytic_bound = std::max(0.0, 1.0 - tail);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Vec> lattice_points_in_ball(const Vec& center, double r) {
  std::vector<Vec> out;
  if (!(r >= 0.0)) return out;
  const std::size_t d = center.size();
  Vec cur(d);
  const double r2 = r * r;
  auto rec = [&](auto&& self, std::size_t axis, double used) -> void {
    if (axis == d) {
      out.push_back(cur);
      return;
    }
    const double room = std::sqrt(std::max(0.0, r2 - used));
    const double lo = std::ceil(center[axis] - room), hi = std::floor(center[axis] + room);
    for (double v = lo; v <= hi; v += 1.0) {
      const double dv = v - center[axis];
      if (used + dv * dv > r2) continue;
      cur[axis] = v;
      self(self, axis + 1, used + dv * dv);
    }
  };
  rec(rec, 0, 0.0);
  return out;
}

std::pair<int, int> v_ell_range(double K, double alpha, int dimension, double intensity) {
  require_finite_positive(intensity, "v_ell_range: intensity");
  const int lo = std::max(1, static_cast<int>(std::ceil(std::pow(std::max(K, 0.0), 1.0 / (2.0 * alpha)))));
  int hi = 1;
  while (std::exp(-intensity * ball_volume(dimension, std::sqrt(static_cast<double>(hi)))) >= kVoidCutoff) ++hi;
  return {lo, std::max(lo, hi)};
}

double vwx_reach(const BenchParams& params, double K, double alpha, int dimension, double intensity) {
  const auto [lo, hi] = v_ell_range(K, alpha, dimension, intensity);
  (void)lo;
  const double R = params.C_delta() * K;
  return std::max(2.0 * R, R + hi + std::sqrt(static_cast<double>(hi)));
}

namespace {

// V and W only; X needs passage times the caller may already hold.
VwxResult vw_membership(const SpatialGrid& grid, const Vec& y, const BenchParams& params, double K,
                        const AlphaParam& alpha, const GeodesicOptions& opts, bool check_w) {
  params.validate();
  const auto& region = grid.sample().region();
  const int d = grid.dimension();
  if (static_cast<int>(y.size()) != d) throw InvalidInput("vwx_membership: dimension mismatch");
  const double R = params.C_delta() * K;
  const auto [ell_lo, ell_hi] = v_ell_range(K, alpha.value(), d, grid.sample().intensity());
  const double reach = std::max(2.0 * R, R + ell_hi + std::sqrt(static_cast<double>(ell_hi)));
  if (!region.contains_ball(y, reach)) throw InvalidInput("vwx_membership: ball around y exceeds the sample box");

  VwxResult out;
  out.ell_min = ell_lo;
  out.ell_max = ell_hi;

  // V: for x with |x - y| <= R + ell, some point within sqrt(ell). The smallest
  // admissible ell for x is the binding one since sqrt(ell) grows with ell.
  out.inV = true;
  const auto lattice_v = lattice_points_in_ball(y, R + ell_hi);
  out.lattice_points_V = lattice_v.size();
  for (const auto& x : lattice_v) {
    const double ell0 = std::max<double>(ell_lo, std::ceil(distance(x, y) - R));
    if (ell0 > ell_hi) continue;
    double dn = std::numeric_limits<double>::infinity();
    if (grid.size() > 0) dn = distance(grid.point(grid.nearest_index(x)), x);
    if (dn > std::sqrt(ell0)) {
      out.inV = false;
      break;
    }
  }

  // W over lattice pairs.
  out.inW = true;
  if (check_w) {
    const auto lattice_w = lattice_points_in_ball(y, 2.0 * R);
    for (std::size_t i = 0; i < lattice_w.size() && out.inW; ++i) {
      std::vector<Vec> targets;
      for (std::size_t j = i + 1; j < lattice_w.size(); ++j) {
        if (distance(lattice_w[i], lattice_w[j]) >= K) targets.push_back(lattice_w[j]);
      }
      out.lattice_pairs_W += targets.size();
      if (targets.empty()) continue;
      const auto res = passage_times_from(grid, lattice_w[i], targets, alpha, opts);
      for (std::size_t j = 0; j < targets.size(); ++j) {
        if (res[j].cost < params.delta * distance(lattice_w[i], targets[j])) {
          out.inW = false;
          break;
        }
        out.certified = out.certified && res[j].certified;
      }
    }
  }

  return out;
}

}  // namespace

VwxResult vwx_membership(const SpatialGrid& grid, const Vec& y, const BenchParams& params, double K,
                         double n, const AlphaParam& alpha, const GeodesicOptions& opts, bool check_w) {
  auto out = vw_membership(grid, y, params, K, alpha, opts, check_w);
  const int d = grid.dimension();
  const Vec left = axis_point(d, 0, -n), right = axis_point(d, 0, n);
  const auto via = via_from_center(grid, left, y, right, alpha, opts);
  const auto direct = passage_time(grid, left, right, alpha, opts);
  out.certified = out.certified && via.certified && direct.certified;
  out.x_gap = via.to_a + via.to_b - direct.cost;
  out.inX = out.x_gap < K;
  return out;
}

JumpCheck jump_bound_check(const std::vector<Vec>& path, const Vec& y, const BenchParams& params, double K,
                           const AlphaParam& alpha, bool in_v) {
  JumpCheck c;
  c.gated = in_v;
  c.bound = std::pow(std::max(K, 0.0), 1.0 / (2.0 * alpha.value())) + 1.0;
  const auto cross = ball_crossing(path, y, params.C_delta() * K);
  if (!cross) return c;
  c.crossing = true;
  const auto [s, t] = *cross;
  if (s > 0) c.entry_jump = distance(path[s], path[s - 1]);
  if (t + 1 < path.size()) c.exit_jump = distance(path[t], path[t + 1]);
  if (in_v) {
    c.violated = (c.entry_jump && *c.entry_jump > c.bound) || (c.exit_jump && *c.exit_jump > c.bound);
  }
  return c;
}

EventEstimate ubiquity_event(const Vec& y, const Vec& z, double c, double K, double intensity,
                             std::size_t replicas, std::uint64_t seed, int threads) {
  require_finite_positive(c, "ubiquity_event: c");
  require_finite_positive(intensity, "ubiquity_event: intensity");
  if (y.size() != z.size() || y.size() < 2) throw InvalidInput("ubiquity_event: bad dimensions");
  const double zn = norm(z);
  if (!(zn > 0.0)) throw InvalidInput("ubiquity_event: z must be nonzero");
  if (replicas == 0) throw InvalidInput("ubiquity_event: need replicas");
  const int d = static_cast<int>(y.size());
  const std::size_t k = ubiquity_count(K, c);

  std::vector<Vec> centers;
  for (std::size_t i = 0; i < k; ++i) {
    Vec ctr = y;
    for (std::size_t a = 0; a < ctr.size(); ++a) ctr[a] += 2.0 * c * static_cast<double>(i) * z[a] / zn;
    centers.push_back(std::move(ctr));
  }

  std::uint64_t hits = replicas;
  if (k > 0) {
    const auto box = segment_box(centers.front(), centers.back(), c);
    auto ok = parallel_map<char>(replicas, threads, [&](std::size_t r) -> char {
      const auto s = sample_poisson(box, intensity, derive_seed(seed, r), d);
      for (const auto& ctr : centers) {
        if (s.count_in_ball(ctr, c) == 0) return 0;
      }
      return 1;
    });
    hits = static_cast<std::uint64_t>(std::count(ok.begin(), ok.end(), char{1}));
  }
  auto e = EventEstimate::from_counts("C", hits, replicas);
  e.analytic = std::pow(1.0 - std::exp(-intensity * ball_volume(d, c)), static_cast<double>(k));
  return e;
}

EventEstimate c_event(const Vec& y, const Vec& z, const BenchParams& params, double phi_n, double intensity,
                      std::size_t replicas, std::uint64_t seed, bool assert_gate, int threads) {
  params.validate();
  if (!(params.c_ubiq < 0.25)) throw InvalidInput("c_event: c must be below 1/4");
  const int d = static_cast<int>(y.size());
  if (assert_gate && !params.within_gate(d)) {
    throw GateError("c_event: theta " + fmt_double(params.theta) + " is not below the gate " +
                    fmt_double(BenchParams::theta_gate(d, params.c_ubiq, params.delta)));
  }
  const double K = params.C_delta() * params.K(phi_n);
  auto e = ubiquity_event(y, z, params.c_ubiq, K, intensity, replicas, seed, threads);
  e.analytic_bound = std::exp(-std::log(phi_n) / 16.0);
  return e;
}

bool b_event_check(const std::vector<Vec>& path, const Vec& y, const Vec& z1, const Vec& z2, double radius) {
  const auto cross = ball_crossing(path, y, radius);
  if (!cross) throw InvalidInput("b_event_check: path does not meet the ball");
  const double d = static_cast<double>(y.size());
  Vec a = y, b = y;
  for (std::size_t i = 0; i < y.size(); ++i) {
    a[i] += z1[i];
    b[i] += z2[i];
  }
  return distance(path[cross->first], a) <= d && distance(path[cross->second], b) <= d;
}

std::pair<Vec, Vec> canonical_witnesses(const std::vector<Vec>& path, const Vec& y, double radius) {
  const auto cross = ball_crossing(path, y, radius);
  if (!cross) throw InvalidInput("canonical_witnesses: path does not meet the ball");
  auto floor_rel = [&](const Vec& p) {
    Vec z(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) z[i] = std::floor(p[i] - y[i]);
    return z;
  };
  return {floor_rel(path[cross->first]), floor_rel(path[cross->second])};
}

// ---------------------------------------------------------------------------

GeodesicAuditSummary geodesic_audit_campaign(double n, const LambdaFamily& lambda, const BenchParams& params,
                                             double K, const CampaignSettings& settings) {
  params.validate();
  const AlphaParam alpha = settings.alpha_param();
  const int d = settings.dimension;
  const Vec left = axis_point(d, 0, -n), right = axis_point(d, 0, n);
  const double reach = vwx_reach(params, K, settings.alpha, d, settings.intensity);
  const auto box = bench_box(n, lambda.points, reach, d).hull(segment_box(left, right, bench_padding(n, settings)));
  const double R = params.C_delta() * K;

  auto parts = parallel_map<GeodesicAuditSummary>(settings.replicas, settings.threads, [&](std::size_t r) {
    const auto seed = replica_seed(settings.master_seed, "geodesic-audit", n, r);
    SpatialGrid grid(sample_poisson(box, settings.intensity, seed, d), settings.cell_size());
    GeodesicAuditSummary s;
    const auto direct = passage_time(grid, left, right, alpha, settings.geodesic);
    for (const auto& y : lambda.points) {
      ++s.geodesics;
      const auto via = via_from_center(grid, left, y, right, alpha, settings.geodesic);
      if (!via.certified || !direct.certified) {
        ++s.uncertified;
        continue;
      }
      s.local_violations += audit_local_optimality(via.first, grid, alpha).size();
      s.local_violations += audit_local_optimality(via.second, grid, alpha).size();
      const auto vwx = vw_membership(grid, y, params, K, alpha, settings.geodesic, true);
      s.in_v += vwx.inV;
      s.in_w += vwx.inW;
      s.in_vw += vwx.inV && vwx.inW;
      s.in_x += via.to_a + via.to_b - direct.cost < K;
      const auto path = via.path();
      const auto jump = jump_bound_check(path, y, params, K, alpha, vwx.inV);
      if (!jump.crossing) continue;
      ++s.crossings;
      if (jump.entry_jump) s.max_entry_jump = std::max(s.max_entry_jump, *jump.entry_jump);
      if (jump.gated) {
        ++s.jump_checked;
        s.jump_violations += jump.violated;
      }
      const auto [z1, z2] = canonical_witnesses(path, y, R);
      ++s.witness_checked;
      for (const auto* z : {&z1, &z2}) {
        if (norm(*z) > 2.0 * R || norm(*z) == 0.0) {
          ++s.witness_outside;
          break;
        }
      }
      s.b_event_failures += !b_event_check(path, y, z1, z2, R);
    }
    return s;
  });

  GeodesicAuditSummary out;
  out.n = n;
  for (const auto& s : parts) {
    out.geodesics += s.geodesics;
    out.uncertified += s.uncertified;
    out.local_violations += s.local_violations;
    out.in_v += s.in_v;
    out.in_w += s.in_w;
    out.in_vw += s.in_vw;
    out.in_x += s.in_x;
    out.crossings += s.crossings;
    out.jump_checked += s.jump_checked;
    out.jump_violations += s.jump_violations;
    out.witness_checked += s.witness_checked;
    out.witness_outside += s.witness_outside;
    out.b_event_failures += s.b_event_failures;
    out.max_entry_jump = std::max(out.max_entry_jump, s.max_entry_jump);
  }
  return out;
}

// ---------------------------------------------------------------------------

ResamplingResult resampling_variance_experiment(double n, const CampaignSettings& settings) {
  require_finite_positive(n, "resampling_variance_experiment: n");
  if (settings.replicas == 0) throw InvalidInput("resampling_variance_experiment: need replicas");
  const AlphaParam alpha = settings.alpha_param();
  const int d = settings.dimension;
  const Vec origin(static_cast<std::size_t>(d), 0.0), target = axis_point(d, 0, n);
  const double pad = std::max(bench_padding(n, settings), 2.0 + 1e-9);
  const auto box = segment_box(origin, target, pad);

  ResamplingResult out;
  out.n = n;
  out.event_probability = planted_event_probability(d, settings.intensity);
  out.implied_variance_bound = out.event_probability;
  out.replicas = parallel_map<ResamplingReplica>(settings.replicas, settings.threads, [&](std::size_t r) {
    ResamplingReplica rep;
    rep.replica = r;
    rep.seed = replica_seed(settings.master_seed, "resampling", n, r);
    rep.seed2 = replica_seed(settings.master_seed, "resampling/inner", n, r);
    const auto pair = plant_event_E(box, settings.intensity, rep.seed, rep.seed2);
    const SpatialGrid g0(pair.original, settings.cell_size());
    const SpatialGrid g1(pair.resampled, settings.cell_size());
    const auto t0 = passage_time(g0, origin, target, alpha, settings.geodesic);
    const auto t1 = passage_time(g1, origin, target, alpha, settings.geodesic);
    rep.T = t0.cost;
    rep.T_resampled = t1.cost;
    rep.difference = t1.cost - t0.cost;
    rep.start = nearest(g0, origin);
    rep.start_resampled = nearest(g1, origin);
    rep.certified = t0.certified && t1.certified;
    return rep;
  });
  out.min_difference = std::numeric_limits<double>::infinity();
  for (const auto& rep : out.replicas) {
    if (!rep.certified) {
      ++out.uncertified;
      continue;
    }
    out.differences.push(rep.difference);
    out.min_difference = std::min(out.min_difference, rep.difference);
    if (rep.difference < 1.0 - 1e-9) out.violations.push_back(rep.replica);
  }
  return out;
}

// ---------------------------------------------------------------------------

double kolmogorov_q(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  if (lambda < 1.18) {
    // Jacobi-transformed series, fast for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      sum += std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-300) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double D = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    D = std::max(D, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  return {D, kolmogorov_q((en + 0.12 + 0.11 / en) * D)};
}

KsResult ks_uniform(std::vector<double> xs) {
  if (xs.empty()) throw InvalidInput("ks_uniform: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double D = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = std::clamp(xs[i], 0.0, 1.0);
    D = std::max({D, (i + 1) / n - x, x - i / n});
  }
  const double en = std::sqrt(n);
  return {D, kolmogorov_q((en + 0.12 + 0.11 / en) * D)};
}

std::vector<double> direction_sample(double n, const Vec& u, const CampaignSettings& settings,
                                     const std::string& tag, bool padded) {
  require_finite_positive(n, "direction_sample: n");
  if (static_cast<int>(u.size()) != settings.dimension) throw InvalidInput("direction_sample: dimension mismatch");
  if (std::abs(norm(u) - 1.0) > 1e-9) throw InvalidInput("direction_sample: direction must be a unit vector");
  const AlphaParam alpha = settings.alpha_param();
  const Vec origin(u.size(), 0.0);
  Vec target = u;
  for (auto& v : target) v *= n;

  auto values = parallel_map<double>(settings.replicas, settings.threads, [&](std::size_t r) {
    const auto seed = replica_seed(settings.master_seed, tag, n, r);
    GeodesicResult g;
    if (padded) {
      g = padded_passage_time(origin, target, bench_padding(n, settings), seed, settings).geodesic;
    } else {
      const SpatialGrid grid(sample_poisson(segment_box(origin, target, 0.5), settings.intensity, seed,
                                            settings.dimension),
                             settings.cell_size());
      g = passage_time(grid, origin, target, alpha, settings.geodesic);
    }
    return g.certified ? g.cost : std::numeric_limits<double>::quiet_NaN();
  });
  std::erase_if(values, [](double v) { return std::isnan(v); });
  return values;
}

RotationResult rotation_invariance_test(double n, const std::vector<Vec>& directions,
                                        const CampaignSettings& settings, const std::string& tag, bool padded) {
  if (directions.size() < 2) throw InvalidInput("rotation_invariance_test: need at least two directions");
  std::vector<std::vector<double>> samples;
  for (std::size_t i = 0; i < directions.size(); ++i) {
    samples.push_back(direction_sample(n, directions[i], settings, tag + "/dir" + std::to_string(i), padded));
  }
  RotationResult out;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      out.pairs.push_back({i, j, ks_two_sample(samples[i], samples[j])});
      kept += out.pairs.back().ks.p_value > 0.01;
    }
  }
  out.fraction_not_rejected = static_cast<double>(kept) / static_cast<double>(out.pairs.size());
  out.passed = out.fraction_not_rejected >= 0.8;
  return out;
}

}  // namespace fpp
