#include "fpp/point_process.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include <boost/random/poisson_distribution.hpp>

#include "fpp/errors.hpp"

namespace fpp {

double distance_squared(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(distance_squared(a, b));
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

double ball_volume(int dimension, double radius) {
  const double d = dimension;
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(radius, d);
}

// ---------------------------------------------------------------------------
// BoxRegion

BoxRegion::BoxRegion(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.size() != hi_.size() || lo_.empty()) {
    throw InvalidInput("BoxRegion: lo and hi must have the same nonzero dimension");
  }
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]) || !(lo_[i] < hi_[i])) {
      throw InvalidInput("BoxRegion: degenerate extent on axis " + std::to_string(i));
    }
  }
}

BoxRegion BoxRegion::centered_cube(int dimension, double half_width) {
  return BoxRegion(Vec(static_cast<std::size_t>(dimension), -half_width),
                   Vec(static_cast<std::size_t>(dimension), half_width));
}

double BoxRegion::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo_.size(); ++i) v *= hi_[i] - lo_[i];
  return v;
}

double BoxRegion::diameter() const { return distance(lo_, hi_); }

Vec BoxRegion::center() const {
  Vec c(lo_.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lo_[i] + hi_[i]);
  return c;
}

bool BoxRegion::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
  }
  return true;
}

bool BoxRegion::contains_ball(std::span<const double> c, double r) const {
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (c[i] - r < lo_[i] || c[i] + r > hi_[i]) return false;
  }
  return true;
}

bool BoxRegion::intersects_ball(std::span<const double> c, double r) const {
  double s = 0.0;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    const double t = std::clamp(c[i], lo_[i], hi_[i]) - c[i];
    s += t * t;
  }
  return s <= r * r;
}

double BoxRegion::clearance(std::span<const double> x) const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    m = std::min({m, x[i] - lo_[i], hi_[i] - x[i]});
  }
  return m;
}

BoxRegion BoxRegion::hull(const BoxRegion& other) const {
  if (other.dimension() != dimension()) throw InvalidInput("BoxRegion::hull: dimension mismatch");
  Vec lo = lo_, hi = hi_;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] = std::min(lo[i], other.lo_[i]);
    hi[i] = std::max(hi[i], other.hi_[i]);
  }
  return {std::move(lo), std::move(hi)};
}

BoxRegion BoxRegion::padded(double pad) const {
  Vec lo = lo_, hi = hi_;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    lo[i] -= pad;
    hi[i] += pad;
  }
  return {std::move(lo), std::move(hi)};
}

// ---------------------------------------------------------------------------
// PoissonSample

namespace {

// Indices of coinciding points (all but the first of each group).
std::vector<std::size_t> duplicate_indices(const std::vector<double>& coords, std::size_t d) {
  const std::size_t n = coords.size() / d;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto pt = [&](std::size_t i) { return std::span<const double>(coords.data() + i * d, d); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (lex_less(pt(a), pt(b))) return true;
    if (lex_less(pt(b), pt(a))) return false;
    return a < b;
  });
  std::vector<std::size_t> dups;
  for (std::size_t k = 1; k < n; ++k) {
    auto a = pt(order[k - 1]);
    auto b = pt(order[k]);
    if (std::equal(a.begin(), a.end(), b.begin())) dups.push_back(order[k]);
  }
  std::sort(dups.begin(), dups.end());
  return dups;
}

void draw_uniform_in_box(Engine& rng, const BoxRegion& box, double* out) {
  const auto& lo = box.lo();
  const auto& hi = box.hi();
  for (std::size_t i = 0; i < lo.size(); ++i) {
    // Guard against rounding up to hi when the extent is large.
    out[i] = std::min(lo[i] + (hi[i] - lo[i]) * uniform01(rng), hi[i]);
  }
}

std::uint64_t draw_poisson(Engine& rng, double mean) {
  if (mean <= 0.0) return 0;
  boost::random::poisson_distribution<std::uint64_t, double> dist(mean);
  return dist(rng);
}

}  // namespace

PoissonSample::PoissonSample(BoxRegion region, double intensity, std::uint64_t seed,
                             std::vector<double> coords)
    : region_(std::move(region)), intensity_(intensity), seed_(seed), coords_(std::move(coords)) {
  const auto d = static_cast<std::size_t>(region_.dimension());
  if (region_.dimension() < 2) throw InvalidInput("PoissonSample: dimension must be >= 2");
  if (!(intensity_ > 0.0) || !std::isfinite(intensity_)) {
    throw InvalidInput("PoissonSample: intensity must be positive");
  }
  if (coords_.size() % d != 0) throw InvalidInput("PoissonSample: ragged coordinate array");
  for (std::size_t i = 0; i < size(); ++i) {
    if (!region_.contains(point(i))) throw InvalidInput("PoissonSample: point outside region");
  }
  if (!duplicate_indices(coords_, d).empty()) {
    throw InvalidInput("PoissonSample: duplicate points");
  }
}

Vec PoissonSample::point_vec(std::size_t i) const {
  auto p = point(i);
  return {p.begin(), p.end()};
}

std::size_t PoissonSample::count_in_ball(std::span<const double> c, double r) const {
  std::size_t k = 0;
  const double r2 = r * r;
  for (std::size_t i = 0; i < size(); ++i) k += distance_squared(point(i), c) <= r2;
  return k;
}

PoissonSample sample_poisson(const BoxRegion& region, double intensity, std::uint64_t seed,
                             int dimension) {
  if (dimension < 2) throw InvalidInput("sample_poisson: dimension must be >= 2");
  if (region.dimension() != dimension) {
    throw InvalidInput("sample_poisson: region dimension does not match d");
  }
  if (!(intensity > 0.0) || !std::isfinite(intensity)) {
    throw InvalidInput("sample_poisson: intensity must be positive");
  }
  const double volume = region.volume();
  if (!(volume > 0.0)) throw InvalidInput("sample_poisson: region has zero volume");

  Engine rng(seed);
  const auto count = draw_poisson(rng, intensity * volume);
  const auto d = static_cast<std::size_t>(dimension);
  std::vector<double> coords(count * d);
  for (std::size_t i = 0; i < count; ++i) draw_uniform_in_box(rng, region, coords.data() + i * d);
  for (auto dups = duplicate_indices(coords, d); !dups.empty(); dups = duplicate_indices(coords, d)) {
    for (auto i : dups) draw_uniform_in_box(rng, region, coords.data() + i * d);
  }
  return PoissonSample(region, intensity, seed, std::move(coords));
}

PoissonSample resample_region(const PoissonSample& sample, std::span<const double> center,
                              double radius, std::uint64_t seed2) {
  const auto& region = sample.region();
  if (center.size() != static_cast<std::size_t>(sample.dimension())) {
    throw InvalidInput("resample_region: center dimension mismatch");
  }
  if (!(radius > 0.0)) throw InvalidInput("resample_region: radius must be positive");
  if (!region.intersects_ball(center, radius)) {
    throw InvalidInput("resample_region: ball does not meet the region");
  }
  const auto d = static_cast<std::size_t>(sample.dimension());
  const double r2 = radius * radius;

  std::vector<double> coords;
  coords.reserve(sample.coords().size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    auto p = sample.point(i);
    if (distance_squared(p, center) > r2) coords.insert(coords.end(), p.begin(), p.end());
  }

  // Fresh points: Poisson on (bounding box of the ball) ∩ region, thinned to the ball.
  Vec lo(d), hi(d);
  bool degenerate = false;
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = std::max(region.lo()[i], center[i] - radius);
    hi[i] = std::min(region.hi()[i], center[i] + radius);
    degenerate = degenerate || !(lo[i] < hi[i]);
  }
  if (!degenerate) {
    const BoxRegion window(lo, hi);
    Engine rng(seed2);
    const auto count = draw_poisson(rng, sample.intensity() * window.volume());
    Vec p(d);
    for (std::uint64_t k = 0; k < count; ++k) {
      draw_uniform_in_box(rng, window, p.data());
      if (distance_squared(p, center) <= r2) coords.insert(coords.end(), p.begin(), p.end());
    }
  }
  return PoissonSample(region, sample.intensity(), derive_seed(sample.seed(), seed2),
                       std::move(coords));
}

PlantedPair plant_event_E(const BoxRegion& region, double intensity, std::uint64_t seed,
                          std::uint64_t seed2) {
  const int dim = region.dimension();
  const Vec origin(static_cast<std::size_t>(dim), 0.0);
  if (!region.contains_ball(origin, 2.0)) {
    throw InvalidInput("plant_event_E: region must contain B(0,2)");
  }
  const auto base = sample_poisson(region, intensity, seed, dim);
  const auto d = static_cast<std::size_t>(dim);

  std::vector<double> cleared;
  cleared.reserve(base.coords().size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto p = base.point(i);
    if (distance_squared(p, origin) > 4.0) cleared.insert(cleared.end(), p.begin(), p.end());
  }

  // Replacement inside B(0,2): count ~ Poisson(intensity Vol B(1)) given >= 1,
  // all uniform in B(0,1); the annulus stays empty.
  Engine rng(seed2);
  const double mean = intensity * ball_volume(dim, 1.0);
  std::uint64_t m = 0;
  while (m == 0) m = draw_poisson(rng, mean);
  std::vector<double> planted = cleared;
  const auto unit = BoxRegion::centered_cube(dim, 1.0);
  Vec p(d);
  for (std::uint64_t k = 0; k < m; ++k) {
    do {
      draw_uniform_in_box(rng, unit, p.data());
    } while (distance_squared(p, origin) > 1.0);
    planted.insert(planted.end(), p.begin(), p.end());
  }

  PoissonSample original(region, intensity, seed, std::move(cleared));
  PoissonSample resampled(region, intensity, derive_seed(seed, seed2), std::move(planted));
  return {std::move(original), std::move(resampled)};
}

double planted_event_probability(int dimension, double intensity) {
  const double v1 = intensity * ball_volume(dimension, 1.0);
  const double v2 = intensity * ball_volume(dimension, 2.0);
  return std::exp(-v2) * (1.0 - std::exp(-v1)) * std::exp(-(v2 - v1));
}

// ---------------------------------------------------------------------------
// Serialization

void write_sample_csv(std::ostream& out, const PoissonSample& sample) {
  const auto old_precision = out.precision(17);
  out << sample.dimension() << ',' << sample.size() << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    auto p = sample.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) out << (k ? "," : "") << p[k];
    out << '\n';
  }
  out.precision(old_precision);
}

void write_sample_binary(std::ostream& out, const PoissonSample& sample) {
  static_assert(std::endian::native == std::endian::little, "binary format is little-endian");
  const auto d = static_cast<std::int32_t>(sample.dimension());
  const auto n = static_cast<std::uint64_t>(sample.size());
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(sample.coords().data()),
            static_cast<std::streamsize>(sample.coords().size() * sizeof(double)));
}

std::vector<double> read_sample_csv(std::istream& in, int& dimension) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("read_sample_csv: missing header");
  std::size_t count = 0;
  char comma = 0;
  std::istringstream header(line);
  if (!(header >> dimension >> comma >> count) || comma != ',' || dimension < 1) {
    throw InvalidInput("read_sample_csv: bad header");
  }
  std::vector<double> coords;
  coords.reserve(count * static_cast<std::size_t>(dimension));
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw InvalidInput("read_sample_csv: truncated");
    std::istringstream row(line);
    std::string cell;
    int k = 0;
    while (std::getline(row, cell, ',')) {
      coords.push_back(std::stod(cell));
      ++k;
    }
    if (k != dimension) throw InvalidInput("read_sample_csv: wrong column count");
  }
  return coords;
}

}  // namespace fpp
