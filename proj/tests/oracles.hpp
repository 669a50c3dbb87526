#pragma once

// Reference implementations used only by the tests. Each one is written
// straight from the definition, with no shared code path in the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fpp/point_process.hpp"
#include "fpp/seeding.hpp"

namespace oracle {

using fpp::Vec;

inline double dist(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline std::vector<Vec> points_of(const fpp::PoissonSample& s) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back(s.point_vec(i));
  return out;
}

/// Closest point by linear scan; among equal distances the lexicographically smallest.
inline std::size_t nearest(const std::vector<Vec>& pts, const Vec& x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double a = dist(pts[i], x), b = dist(pts[best], x);
    if (a < b || (a == b && pts[i] < pts[best])) best = i;
  }
  return best;
}

/// O(N^2) Dijkstra on the complete graph with weights |p - q|^alpha.
inline double passage_time(const std::vector<Vec>& pts, const Vec& x, const Vec& y, double alpha) {
  const std::size_t n = pts.size();
  const std::size_t s = nearest(pts, x), t = nearest(pts, y);
  std::vector<double> d(n, std::numeric_limits<double>::infinity());
  std::vector<bool> done(n, false);
  d[s] = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && (u == n || d[i] < d[u])) u = i;
    }
    if (u == n || u == t) break;
    done[u] = true;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v]) continue;
      d[v] = std::min(d[v], d[u] + std::pow(dist(pts[u], pts[v]), alpha));
    }
  }
  return d[t];
}

/// Single-source O(N^2) Dijkstra from point s to every point.
inline std::vector<double> distances_from(const std::vector<Vec>& pts, std::size_t s, double alpha) {
  const std::size_t n = pts.size();
  std::vector<double> d(n, std::numeric_limits<double>::infinity());
  std::vector<bool> done(n, false);
  d[s] = 0.0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && (u == n || d[i] < d[u])) u = i;
    }
    done[u] = true;
    for (std::size_t v = 0; v < n; ++v) {
      if (!done[v]) d[v] = std::min(d[v], d[u] + std::pow(dist(pts[u], pts[v]), alpha));
    }
  }
  return d;
}

struct Moments {
  double n = 0, mean = 0, m2 = 0, m3 = 0, m4 = 0;
};

/// Two-pass central sums.
inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= m.n;
  for (double x : xs) {
    const double d = x - m.mean;
    m.m2 += d * d;
    m.m3 += d * d * d;
    m.m4 += d * d * d * d;
  }
  return m;
}

/// Integer points of B(c, r) by scanning the bounding cube.
inline std::vector<Vec> lattice_ball(const Vec& c, double r) {
  std::vector<Vec> out;
  const std::size_t d = c.size();
  std::vector<long> lo(d), hi(d), cur(d);
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = static_cast<long>(std::floor(c[i] - r)) - 1;
    hi[i] = static_cast<long>(std::ceil(c[i] + r)) + 1;
    cur[i] = lo[i];
  }
  while (true) {
    Vec p(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = static_cast<double>(cur[i]);
    if (dist(p, c) <= r) out.push_back(p);
    std::size_t i = 0;
    while (i < d && ++cur[i] > hi[i]) cur[i] = lo[i], ++i;
    if (i == d) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
