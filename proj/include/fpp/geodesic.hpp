#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fpp/point_process.hpp"
#include "fpp/spatial_grid.hpp"

namespace fpp {

/// Edge-cost exponent; the model needs alpha > 1.
class AlphaParam {
 public:
  explicit AlphaParam(double alpha);
  double value() const { return alpha_; }
  /// |v|^alpha from a squared length.
  double cost_from_squared(double len2) const;

 private:
  double alpha_;
};

struct GeodesicOptions {
  /// Starting search radius; <= 0 selects the default scale
  /// cutoff_scale * intensity^(-1/d) * sqrt(log(1 + N)).
  double initial_cutoff = 0.0;
  double cutoff_scale = 1.0;
  /// Samples with at most this many points use the complete graph directly.
  std::size_t exact_threshold = 64;
  /// Doubling stops here; an unstabilized result is returned uncertified.
  double max_cutoff = std::numeric_limits<double>::infinity();
  /// Relative slack used by the local-optimality audit and stabilization test.
  double relative_tolerance = 1e-12;
};

struct GeodesicResult {
  double cost = 0.0;
  std::vector<Vec> path;
  std::vector<std::size_t> path_indices;
  /// Largest radius searched (box diameter for complete-graph runs).
  double cutoff_radius = 0.0;
  bool certified = false;
  /// Every path vertex is at least `cutoff_radius` (complete graph: the
  /// longest path edge) away from the box boundary.
  bool boundary_clear = false;
};

double edge_cost(std::span<const double> a, std::span<const double> b, const AlphaParam& alpha);

/// Sum of edge costs along a vertex sequence.
double path_cost(std::span<const Vec> path, const AlphaParam& alpha);

double default_initial_cutoff(const SpatialGrid& index, const GeodesicOptions& opts);

/// Exact passage time T(x, y) from D(x) to D(y) with its optimal path.
///
/// Dijkstra runs on edges no longer than a cutoff r, with r doubled until the
/// cost at r equals the cost at 2r and the 2r path passes the local
/// optimality audit. Once the cutoff spans the box the graph is complete and
/// the answer is exact by construction.
GeodesicResult passage_time(const SpatialGrid& index, std::span<const double> x,
                            std::span<const double> y, const AlphaParam& alpha,
                            const GeodesicOptions& opts = {});

/// One search from D(x) to every D(target); each result certified jointly.
std::vector<GeodesicResult> passage_times_from(const SpatialGrid& index, std::span<const double> x,
                                               std::span<const Vec> targets,
                                               const AlphaParam& alpha,
                                               const GeodesicOptions& opts = {});

/// T(a, y, b) = T(a, y) + T(y, b) together with the concatenated path.
struct ViaResult {
  double cost = 0.0;
  GeodesicResult first;   // D(a) -> D(y)
  GeodesicResult second;  // D(y) -> D(b)
  bool certified() const { return first.certified && second.certified; }
  /// D(a), ..., D(y), ..., D(b) with D(y) listed once.
  std::vector<Vec> path() const;
};
ViaResult geodesic_via(const SpatialGrid& index, std::span<const double> a,
                       std::span<const double> y, std::span<const double> b,
                       const AlphaParam& alpha, const GeodesicOptions& opts = {});
double passage_time_via(const SpatialGrid& index, std::span<const double> a,
                        std::span<const double> y, std::span<const double> b,
                        const AlphaParam& alpha, const GeodesicOptions& opts = {});

struct BruteForceResult {
  double cost = 0.0;
  std::vector<Vec> path;
};
inline constexpr std::size_t kDefaultOracleBound = 64;

/// Floyd–Warshall over the complete graph of `points`; endpoints are the
/// points nearest x and y (lexicographic ties). Refuses above `bound` points.
BruteForceResult brute_force_passage_time(std::span<const Vec> points, std::span<const double> x,
                                          std::span<const double> y, const AlphaParam& alpha,
                                          std::size_t bound = kDefaultOracleBound);

/// Longest Euclidean jump along the path; 0 for fewer than two vertices.
double max_jump(std::span<const Vec> path);
inline double max_jump(const GeodesicResult& g) { return max_jump(g.path); }

/// First and last path indices inside the closed ball, or nullopt.
std::optional<std::pair<std::size_t, std::size_t>> ball_crossing(std::span<const Vec> path,
                                                                 std::span<const double> center,
                                                                 double radius);
inline std::optional<std::pair<std::size_t, std::size_t>> ball_crossing(
    const GeodesicResult& g, std::span<const double> center, double radius) {
  return ball_crossing(g.path, center, radius);
}

struct AuditViolation {
  std::size_t edge = 0;  // path[edge] -> path[edge + 1]
  Vec witness;
  double direct_cost = 0.0;
  double detour_cost = 0.0;
};

/// For each path edge (a, b), every sample point z with
/// |a-z|^alpha + |z-b|^alpha < |a-b|^alpha - tol. Empty for a true geodesic.
std::vector<AuditViolation> audit_local_optimality(std::span<const Vec> path,
                                                   const SpatialGrid& index,
                                                   const AlphaParam& alpha,
                                                   double relative_tolerance = 1e-12);
inline std::vector<AuditViolation> audit_local_optimality(const GeodesicResult& g,
                                                          const SpatialGrid& index,
                                                          const AlphaParam& alpha,
                                                          double relative_tolerance = 1e-12) {
  return audit_local_optimality(g.path, index, alpha, relative_tolerance);
}

/// Plotting exports: CSV with one vertex per row, JSON with cost/certified/cutoff/vertices.
void write_geodesic_csv(std::ostream& out, const GeodesicResult& g);
void write_geodesic_json(std::ostream& out, const GeodesicResult& g);

}  // namespace fpp
