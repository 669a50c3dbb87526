#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "fpp/seeding.hpp"

namespace fpp {

using Vec = std::vector<double>;

double norm(std::span<const double> v);
double distance(std::span<const double> a, std::span<const double> b);
double distance_squared(std::span<const double> a, std::span<const double> b);
/// Strict lexicographic order on coordinates.
bool lex_less(std::span<const double> a, std::span<const double> b);

/// Volume of the d-dimensional Euclidean ball of the given radius.
double ball_volume(int dimension, double radius);

/// Axis-aligned box with lo[i] < hi[i] on every axis.
class BoxRegion {
 public:
  BoxRegion(Vec lo, Vec hi);

  /// Cube [-half, half]^d.
  static BoxRegion centered_cube(int dimension, double half_width);

  int dimension() const { return static_cast<int>(lo_.size()); }
  const Vec& lo() const { return lo_; }
  const Vec& hi() const { return hi_; }
  double volume() const;
  double diameter() const;
  Vec center() const;
  bool contains(std::span<const double> x) const;
  /// Closed ball B(c, r) lies inside the box.
  bool contains_ball(std::span<const double> c, double r) const;
  bool intersects_ball(std::span<const double> c, double r) const;
  /// Distance from an interior point to the nearest face (negative outside).
  double clearance(std::span<const double> x) const;

  /// Smallest box containing both.
  BoxRegion hull(const BoxRegion& other) const;
  /// Box grown by `pad` on every side.
  BoxRegion padded(double pad) const;

  bool operator==(const BoxRegion&) const = default;

 private:
  Vec lo_;
  Vec hi_;
};

/// A realization of a homogeneous Poisson process restricted to a box.
/// Points are stored row-major; the object is immutable once built.
class PoissonSample {
 public:
  /// Validates that every point lies in `region` and no two points coincide.
  PoissonSample(BoxRegion region, double intensity, std::uint64_t seed, std::vector<double> coords);

  int dimension() const { return region_.dimension(); }
  const BoxRegion& region() const { return region_; }
  double intensity() const { return intensity_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dimension()); }
  bool empty() const { return coords_.empty(); }

  std::span<const double> point(std::size_t i) const {
    const auto d = static_cast<std::size_t>(dimension());
    return {coords_.data() + i * d, d};
  }
  Vec point_vec(std::size_t i) const;
  const std::vector<double>& coords() const { return coords_; }

  /// Number of points in the closed ball B(c, r) (linear scan).
  std::size_t count_in_ball(std::span<const double> c, double r) const;

  bool operator==(const PoissonSample&) const = default;

 private:
  BoxRegion region_;
  double intensity_;
  std::uint64_t seed_;
  std::vector<double> coords_;
};

/// Count ~ Poisson(intensity * volume), then i.i.d. uniform positions.
/// Coinciding points are re-drawn. Deterministic in all arguments.
PoissonSample sample_poisson(const BoxRegion& region, double intensity, std::uint64_t seed,
                             int dimension);

/// Replaces the configuration inside the closed ball B(center, radius) by an
/// independent Poisson sample drawn from `seed2`. Points outside the ball are
/// kept bitwise and in their original order; fresh points follow them.
PoissonSample resample_region(const PoissonSample& sample, std::span<const double> center,
                              double radius, std::uint64_t seed2);

/// The pair (original, resampled) conditioned on the planted event
///   {no original point in B(0,2), >= 1 fresh point in B(0,1), none in B(0,2)\B(0,1)}.
struct PlantedPair {
  PoissonSample original;
  PoissonSample resampled;
};
PlantedPair plant_event_E(const BoxRegion& region, double intensity, std::uint64_t seed,
                          std::uint64_t seed2);

/// Unconditional probability of the planted event at the given intensity.
double planted_event_probability(int dimension, double intensity);

/// Debug serialization: header line "d,count", then one CSV row per point.
void write_sample_csv(std::ostream& out, const PoissonSample& sample);
/// Little-endian binary: int32 d, uint64 count, count*d float64 row-major.
void write_sample_binary(std::ostream& out, const PoissonSample& sample);
/// Reads the flat CSV form back (region and seed must be supplied).
std::vector<double> read_sample_csv(std::istream& in, int& dimension);

}  // namespace fpp
