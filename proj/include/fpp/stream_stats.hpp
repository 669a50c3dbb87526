#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace fpp {

/// Mergeable moment accumulator (count, mean and central sums up to order 4).
/// Merging uses the pairwise update formulas of Chan et al. / Pébay, so
/// accumulators built on disjoint shards combine into the pooled statistics.
class StreamStats {
 public:
  StreamStats() = default;
  explicit StreamStats(std::string units) : units_(std::move(units)) {}

  void push(double x);
  /// Throws InvalidInput when the unit annotations differ.
  void merge(const StreamStats& other);

  std::uint64_t count() const { return count_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  double m3() const { return m3_; }
  double m4() const { return m4_; }
  const std::string& units() const { return units_; }

  /// Unbiased sample variance m2/(count-1); 0 below two observations.
  double variance() const;
  double standard_error() const;
  /// Half-width of the normal-approximation 95% interval for the mean.
  double ci95_mean() const { return 1.96 * standard_error(); }
  /// Standard error of the sample variance from the fourth central moment.
  double variance_standard_error() const;
  double ci95_variance() const { return 1.96 * variance_standard_error(); }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
  std::string units_;
};

StreamStats merge_stats(const StreamStats& a, const StreamStats& b);
StreamStats stats_of(std::span<const double> xs, std::string units = {});

}  // namespace fpp
