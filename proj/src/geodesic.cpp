#include "fpp/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <queue>
#include <string>

#include "json.hpp"

#include "fpp/errors.hpp"

namespace fpp {

AlphaParam::AlphaParam(double alpha) : alpha_(alpha) {
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    throw InvalidInput("alpha must be a finite real > 1, got " + std::to_string(alpha));
  }
}

double AlphaParam::cost_from_squared(double len2) const {
  if (alpha_ == 2.0) return len2;
  return std::pow(len2, 0.5 * alpha_);
}

double edge_cost(std::span<const double> a, std::span<const double> b, const AlphaParam& alpha) {
  return alpha.cost_from_squared(distance_squared(a, b));
}

double path_cost(std::span<const Vec> path, const AlphaParam& alpha) {
  double c = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) c += edge_cost(path[i - 1], path[i], alpha);
  return c;
}

double default_initial_cutoff(const SpatialGrid& index, const GeodesicOptions& opts) {
  const auto& s = index.sample();
  const double spacing = std::pow(s.intensity(), -1.0 / s.dimension());
  const double n = static_cast<double>(s.size());
  return opts.cutoff_scale * spacing * std::sqrt(std::log1p(n));
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

struct Search {
  std::vector<double> dist;
  std::vector<std::uint32_t> prev;
};

// Dijkstra from `source` over edges of length <= cutoff; stops once every
// target is settled.
Search dijkstra(const SpatialGrid& index, std::size_t source, std::span<const std::size_t> targets,
                const AlphaParam& alpha, double cutoff) {
  const std::size_t n = index.size();
  Search out{std::vector<double>(n, kInf), std::vector<std::uint32_t>(n, kNone)};
  std::vector<char> settled(n, 0);
  std::vector<char> wanted(n, 0);
  std::size_t remaining = 0;
  for (auto t : targets) {
    if (!wanted[t]) {
      wanted[t] = 1;
      ++remaining;
    }
  }

  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  out.dist[source] = 0.0;
  heap.emplace(0.0, static_cast<std::uint32_t>(source));

  while (!heap.empty() && remaining > 0) {
    const auto [du, u32] = heap.top();
    heap.pop();
    const std::size_t u = u32;
    if (settled[u] || du > out.dist[u]) continue;
    settled[u] = 1;
    if (wanted[u]) --remaining;
    if (remaining == 0) break;

    const auto pu = index.point(u);
    index.for_each_in_ball(pu, cutoff, [&](std::size_t v, double len2) {
      if (settled[v] || out.dist[v] < du) return;
      const double nd = du + alpha.cost_from_squared(len2);
      if (nd < out.dist[v]) {
        out.dist[v] = nd;
        out.prev[v] = u32;
        heap.emplace(nd, static_cast<std::uint32_t>(v));
      } else if (nd == out.dist[v] && lex_less(pu, index.point(out.prev[v]))) {
        out.prev[v] = u32;
      }
    });
  }
  return out;
}

std::vector<std::size_t> trace(const Search& s, std::size_t source, std::size_t target) {
  std::vector<std::size_t> rev;
  for (std::size_t v = target; v != source; v = s.prev[v]) {
    if (s.prev[v] == kNone) throw InternalError("geodesic: broken predecessor chain");
    rev.push_back(v);
  }
  rev.push_back(source);
  std::reverse(rev.begin(), rev.end());
  return rev;
}

bool costs_match(double a, double b, double rel) {
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

GeodesicResult make_result(const SpatialGrid& index, const Search& s, std::size_t source,
                           std::size_t target, double cutoff, bool certified, bool complete) {
  GeodesicResult r;
  r.cost = s.dist[target];
  if (!std::isfinite(r.cost)) {
    throw InternalError("passage_time: target unreachable at the largest cutoff");
  }
  r.path_indices = trace(s, source, target);
  r.path.reserve(r.path_indices.size());
  for (auto i : r.path_indices) r.path.push_back(index.sample().point_vec(i));
  r.cutoff_radius = cutoff;
  r.certified = certified;
  const auto& box = index.sample().region();
  const double needed = complete ? max_jump(r.path) : cutoff;
  double clearance = kInf;
  for (const auto& p : r.path) clearance = std::min(clearance, box.clearance(p));
  r.boundary_clear = clearance >= needed;
  return r;
}

}  // namespace

std::vector<GeodesicResult> passage_times_from(const SpatialGrid& index, std::span<const double> x,
                                               std::span<const Vec> targets,
                                               const AlphaParam& alpha,
                                               const GeodesicOptions& opts) {
  const std::size_t source = index.nearest_index(x);
  std::vector<std::size_t> goal;
  goal.reserve(targets.size());
  for (const auto& t : targets) goal.push_back(index.nearest_index(t));

  const double diameter = index.sample().region().diameter();
  auto finish = [&](const Search& s, double cutoff, bool certified, bool complete) {
    std::vector<GeodesicResult> out;
    out.reserve(goal.size());
    for (auto t : goal) out.push_back(make_result(index, s, source, t, cutoff, certified, complete));
    return out;
  };

  if (index.size() <= opts.exact_threshold) {
    return finish(dijkstra(index, source, goal, alpha, kInf), diameter, true, true);
  }

  double r = opts.initial_cutoff > 0.0 ? opts.initial_cutoff : default_initial_cutoff(index, opts);
  Search current = dijkstra(index, source, goal, alpha, r);
  if (r >= diameter) return finish(current, diameter, true, true);

  while (true) {
    const double r2 = 2.0 * r;
    if (r2 > opts.max_cutoff) {
      // Budget exhausted: report the best restricted answer, uncertified.
      bool reachable = true;
      for (auto t : goal) reachable = reachable && std::isfinite(current.dist[t]);
      if (!reachable) throw InternalError("passage_time: target unreachable within max_cutoff");
      return finish(current, r, false, false);
    }
    Search next = dijkstra(index, source, goal, alpha, r2);
    if (r2 >= diameter) return finish(next, diameter, true, true);

    bool stable = true;
    for (auto t : goal) {
      stable = stable && costs_match(current.dist[t], next.dist[t], opts.relative_tolerance);
    }
    if (stable) {
      auto results = finish(next, r2, false, false);
      bool clean = true;
      for (const auto& g : results) {
        clean = clean && audit_local_optimality(g.path, index, alpha, opts.relative_tolerance).empty();
      }
      if (clean) {
        for (auto& g : results) g.certified = true;
        return results;
      }
    }
    current = std::move(next);
    r = r2;
  }
}

GeodesicResult passage_time(const SpatialGrid& index, std::span<const double> x,
                            std::span<const double> y, const AlphaParam& alpha,
                            const GeodesicOptions& opts) {
  const Vec target(y.begin(), y.end());
  auto results = passage_times_from(index, x, std::span<const Vec>(&target, 1), alpha, opts);
  return std::move(results.front());
}

std::vector<Vec> ViaResult::path() const {
  std::vector<Vec> p = first.path;
  if (!second.path.empty()) p.insert(p.end(), second.path.begin() + 1, second.path.end());
  return p;
}

ViaResult geodesic_via(const SpatialGrid& index, std::span<const double> a,
                       std::span<const double> y, std::span<const double> b,
                       const AlphaParam& alpha, const GeodesicOptions& opts) {
  ViaResult v;
  v.first = passage_time(index, a, y, alpha, opts);
  v.second = passage_time(index, y, b, alpha, opts);
  v.cost = v.first.cost + v.second.cost;
  return v;
}

double passage_time_via(const SpatialGrid& index, std::span<const double> a,
                        std::span<const double> y, std::span<const double> b,
                        const AlphaParam& alpha, const GeodesicOptions& opts) {
  return geodesic_via(index, a, y, b, alpha, opts).cost;
}

BruteForceResult brute_force_passage_time(std::span<const Vec> points, std::span<const double> x,
                                          std::span<const double> y, const AlphaParam& alpha,
                                          std::size_t bound) {
  const std::size_t n = points.size();
  if (n > bound) {
    throw Refused("brute_force_passage_time: " + std::to_string(n) + " points exceed bound " +
                  std::to_string(bound));
  }
  if (n == 0) throw NoPoints();

  auto closest = [&](std::span<const double> q) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      const double di = distance_squared(points[i], q);
      const double db = distance_squared(points[best], q);
      if (di < db || (di == db && lex_less(points[i], points[best]))) best = i;
    }
    return best;
  };
  const std::size_t s = closest(x);
  const std::size_t t = closest(y);

  std::vector<double> w(n * n);
  std::vector<std::size_t> next(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      w[i * n + j] = i == j ? 0.0 : edge_cost(points[i], points[j], alpha);
      next[i * n + j] = j;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double via = w[i * n + k] + w[k * n + j];
        if (via < w[i * n + j]) {
          w[i * n + j] = via;
          next[i * n + j] = next[i * n + k];
        }
      }
    }
  }

  BruteForceResult r;
  r.path.push_back(points[s]);
  for (std::size_t v = s; v != t;) {
    v = next[v * n + t];
    r.path.push_back(points[v]);
  }
  // Re-sum along the path so the value matches an edge-by-edge accumulation.
  r.cost = path_cost(r.path, alpha);
  return r;
}

double max_jump(std::span<const Vec> path) {
  double m = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) m = std::max(m, distance(path[i - 1], path[i]));
  return m;
}

std::optional<std::pair<std::size_t, std::size_t>> ball_crossing(std::span<const Vec> path,
                                                                 std::span<const double> center,
                                                                 double radius) {
  const double r2 = radius * radius;
  std::optional<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (distance_squared(path[i], center) <= r2) {
      if (!out) out.emplace(i, i);
      out->second = i;
    }
  }
  return out;
}

std::vector<AuditViolation> audit_local_optimality(std::span<const Vec> path,
                                                   const SpatialGrid& index,
                                                   const AlphaParam& alpha,
                                                   double relative_tolerance) {
  std::vector<AuditViolation> out;
  const std::size_t d = static_cast<std::size_t>(index.dimension());
  Vec mid(d);
  for (std::size_t e = 0; e + 1 < path.size(); ++e) {
    const auto& a = path[e];
    const auto& b = path[e + 1];
    const double len2 = distance_squared(a, b);
    const double direct = alpha.cost_from_squared(len2);
    const double slack = relative_tolerance * std::max(direct, 1e-300);
    for (std::size_t k = 0; k < d; ++k) mid[k] = 0.5 * (a[k] + b[k]);
    // An improving z is closer than |a-b| to both ends, so it lies in the lens
    // B(a,L) ∩ B(b,L), whose points are within L*sqrt(3)/2 of the midpoint.
    const double reach = std::sqrt(0.75 * len2);
    index.for_each_in_ball(mid, reach, [&](std::size_t i, double) {
      const auto z = index.point(i);
      const double detour = edge_cost(a, z, alpha) + edge_cost(z, b, alpha);
      if (detour < direct - slack) {
        out.push_back({e, Vec(z.begin(), z.end()), direct, detour});
      }
    });
  }
  return out;
}

void write_geodesic_csv(std::ostream& out, const GeodesicResult& g) {
  const auto old = out.precision(17);
  if (!g.path.empty()) {
    for (std::size_t k = 0; k < g.path.front().size(); ++k) out << (k ? "," : "") << 'x' << k;
    out << '\n';
  }
  for (const auto& p : g.path) {
    for (std::size_t k = 0; k < p.size(); ++k) out << (k ? "," : "") << p[k];
    out << '\n';
  }
  out.precision(old);
}

void write_geodesic_json(std::ostream& out, const GeodesicResult& g) {
  nlohmann::json j;
  j["cost"] = g.cost;
  j["certified"] = g.certified;
  j["cutoff"] = g.cutoff_radius;
  j["boundary_clear"] = g.boundary_clear;
  j["vertices"] = g.path;
  out << j.dump(2) << '\n';
}

}  // namespace fpp
