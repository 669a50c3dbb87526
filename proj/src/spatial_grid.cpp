#include "fpp/spatial_grid.hpp"

#include <algorithm>
#include <limits>

#include "fpp/errors.hpp"

namespace fpp {

namespace {
constexpr std::size_t kMaxDimension = 8;
constexpr double kMaxCells = 1u << 26;
}  // namespace

SpatialGrid::SpatialGrid(PoissonSample sample, double cell_size)
    : sample_(std::move(sample)), cell_size_(cell_size) {
  if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) {
    throw InvalidInput("SpatialGrid: cell_size must be positive");
  }
  const auto d = static_cast<std::size_t>(sample_.dimension());
  if (d > kMaxDimension) throw InvalidInput("SpatialGrid: dimension above 8 is not supported");
  if (sample_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput("SpatialGrid: too many points");
  }

  const auto& region = sample_.region();
  dims_.resize(d);
  stride_.resize(d);
  double total = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double cells = std::max(1.0, std::ceil((region.hi()[i] - region.lo()[i]) / cell_size_));
    total *= cells;
    if (total > kMaxCells) throw InvalidInput("SpatialGrid: cell_size too small for the region");
    dims_[i] = static_cast<std::size_t>(cells);
  }
  std::size_t s = 1;
  for (std::size_t i = 0; i < d; ++i) {
    stride_[i] = s;
    s *= dims_[i];
  }

  // Counting sort of points into cells (CSR layout).
  const std::size_t n = sample_.size();
  std::vector<std::size_t> owner(n);
  cell_start_.assign(s + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    owner[i] = cell_of(sample_.point(i));
    ++cell_start_[owner[i] + 1];
  }
  for (std::size_t c = 0; c < s; ++c) cell_start_[c + 1] += cell_start_[c];
  members_.resize(n);
  std::vector<std::size_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < n; ++i) members_[fill[owner[i]]++] = static_cast<std::uint32_t>(i);
}

std::size_t SpatialGrid::nonempty_cells() const {
  std::size_t k = 0;
  for (std::size_t c = 0; c + 1 < cell_start_.size(); ++c) k += cell_start_[c + 1] > cell_start_[c];
  return k;
}

std::size_t SpatialGrid::cell_of(std::span<const double> x) const {
  const auto& lo = sample_.region().lo();
  std::size_t flat = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    const double c = std::floor((x[i] - lo[i]) / cell_size_);
    const auto top = static_cast<double>(dims_[i] - 1);
    flat += static_cast<std::size_t>(std::clamp(c, 0.0, top)) * stride_[i];
  }
  return flat;
}

std::size_t SpatialGrid::nearest_index(std::span<const double> x) const {
  if (sample_.empty()) throw NoPoints();
  if (x.size() != dims_.size()) throw InvalidInput("nearest: query dimension mismatch");

  // Any point's distance bounds the search; grow a ball until it holds a candidate.
  const double limit = sample_.region().diameter() + distance(sample_.region().center(), x);
  double r = cell_size_;
  while (true) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_d2 = std::numeric_limits<double>::infinity();
    for_each_in_ball(x, r, [&](std::size_t i, double d2) {
      if (d2 < best_d2 || (d2 == best_d2 && lex_less(point(i), point(best)))) {
        best = i;
        best_d2 = d2;
      }
    });
    if (best != std::numeric_limits<std::size_t>::max()) return best;
    if (r > limit) throw InternalError("nearest: search exceeded region without a hit");
    r *= 2.0;
  }
}

std::vector<std::size_t> SpatialGrid::ball_indices(std::span<const double> x, double r) const {
  if (x.size() != dims_.size()) throw InvalidInput("ball query dimension mismatch");
  std::vector<std::size_t> out;
  for_each_in_ball(x, r, [&](std::size_t i, double) { out.push_back(i); });
  std::sort(out.begin(), out.end());
  return out;
}

SpatialGrid build_index(const PoissonSample& sample, double cell_size) {
  return SpatialGrid(sample, cell_size);
}

Vec nearest(const SpatialGrid& index, std::span<const double> x) {
  return index.sample().point_vec(index.nearest_index(x));
}

std::vector<Vec> ball_points(const SpatialGrid& index, std::span<const double> x, double r) {
  if (r < 0.0) throw InvalidInput("ball_points: radius must be nonnegative");
  std::vector<Vec> out;
  for (auto i : index.ball_indices(x, r)) out.push_back(index.sample().point_vec(i));
  return out;
}

}  // namespace fpp
