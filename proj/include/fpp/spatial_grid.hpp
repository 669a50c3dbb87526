#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fpp/point_process.hpp"

namespace fpp {

/// Uniform-cell index over a PoissonSample. Cells tile the sample's region;
/// every point sits in exactly one bucket (points on a far face are clamped
/// into the last cell). The grid owns a copy of the sample.
class SpatialGrid {
 public:
  SpatialGrid(PoissonSample sample, double cell_size);

  const PoissonSample& sample() const { return sample_; }
  double cell_size() const { return cell_size_; }
  int dimension() const { return sample_.dimension(); }
  std::size_t size() const { return sample_.size(); }
  std::span<const double> point(std::size_t i) const { return sample_.point(i); }

  std::size_t cell_count() const { return cell_start_.size() - 1; }
  std::size_t nonempty_cells() const;
  /// Flat index of the cell containing x (x clamped into the region).
  std::size_t cell_of(std::span<const double> x) const;
  std::span<const std::uint32_t> bucket(std::size_t cell) const {
    return {members_.data() + cell_start_[cell], cell_start_[cell + 1] - cell_start_[cell]};
  }

  /// Index of D(x): the closest point, ties broken by lexicographic order.
  /// Throws NoPoints on an empty sample.
  std::size_t nearest_index(std::span<const double> x) const;

  /// Indices of points with |p - x| <= r, in ascending index order.
  std::vector<std::size_t> ball_indices(std::span<const double> x, double r) const;

  /// Calls f(index, squared distance) for every point with |p - x| <= r.
  template <class F>
  void for_each_in_ball(std::span<const double> x, double r, F&& f) const;

 private:
  template <class F>
  void for_each_cell_in_box(std::span<const double> x, double r, F&& f) const;

  PoissonSample sample_;
  double cell_size_;
  std::vector<std::size_t> dims_;  // cells per axis
  std::vector<std::size_t> stride_;
  std::vector<std::size_t> cell_start_;
  std::vector<std::uint32_t> members_;
};

SpatialGrid build_index(const PoissonSample& sample, double cell_size);

/// D(x) as a coordinate vector.
Vec nearest(const SpatialGrid& index, std::span<const double> x);

/// Sample points in the closed ball B(x, r), in index order.
std::vector<Vec> ball_points(const SpatialGrid& index, std::span<const double> x, double r);

// ---------------------------------------------------------------------------

template <class F>
void SpatialGrid::for_each_cell_in_box(std::span<const double> x, double r, F&& f) const {
  const std::size_t d = dims_.size();
  const auto& lo = sample_.region().lo();
  std::size_t first[8], last[8], cur[8];
  for (std::size_t i = 0; i < d; ++i) {
    const double a = std::floor((x[i] - r - lo[i]) / cell_size_);
    const double b = std::floor((x[i] + r - lo[i]) / cell_size_);
    const double top = static_cast<double>(dims_[i] - 1);
    if (b < 0.0 || a > top) return;
    first[i] = static_cast<std::size_t>(std::max(a, 0.0));
    last[i] = static_cast<std::size_t>(std::min(b, top));
    cur[i] = first[i];
  }
  while (true) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < d; ++i) flat += cur[i] * stride_[i];
    f(flat);
    std::size_t axis = 0;
    while (axis < d && cur[axis] == last[axis]) {
      cur[axis] = first[axis];
      ++axis;
    }
    if (axis == d) return;
    ++cur[axis];
  }
}

template <class F>
void SpatialGrid::for_each_in_ball(std::span<const double> x, double r, F&& f) const {
  if (r < 0.0 || sample_.empty()) return;
  const double r2 = r * r;
  const std::size_t d = dims_.size();
  const double* base = sample_.coords().data();
  for_each_cell_in_box(x, r, [&](std::size_t cell) {
    for (std::uint32_t idx : bucket(cell)) {
      const double* p = base + static_cast<std::size_t>(idx) * d;
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double t = p[k] - x[k];
        s += t * t;
      }
      if (s <= r2) f(static_cast<std::size_t>(idx), s);
    }
  });
}

}  // namespace fpp
