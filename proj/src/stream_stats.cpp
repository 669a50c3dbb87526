#include "fpp/stream_stats.hpp"

#include <algorithm>
#include <cmath>

#include "fpp/errors.hpp"

namespace fpp {

void StreamStats::push(double x) {
  StreamStats one(units_);
  one.count_ = 1;
  one.mean_ = x;
  merge(one);
}

void StreamStats::merge(const StreamStats& other) {
  if (units_ != other.units_) {
    throw InvalidInput("StreamStats: unit mismatch '" + units_ + "' vs '" + other.units_ + "'");
  }
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const double delta = other.mean_ - mean_;
  const double d_n = delta / n;
  const double d2 = delta * delta;

  const double m2 = m2_ + other.m2_ + d2 * na * nb / n;
  const double m3 = m3_ + other.m3_ + d2 * delta * na * nb * (na - nb) / (n * n) +
                    3.0 * d_n * (na * other.m2_ - nb * m2_);
  const double m4 = m4_ + other.m4_ +
                    d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                    6.0 * d_n * d_n * (na * na * other.m2_ + nb * nb * m2_) +
                    4.0 * d_n * (na * other.m3_ - nb * m3_);

  mean_ += d_n * nb;
  m2_ = m2;
  m3_ = m3;
  m4_ = m4;
  count_ += other.count_;
}

double StreamStats::variance() const {
  return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
}

double StreamStats::standard_error() const {
  return count_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(count_));
}

double StreamStats::variance_standard_error() const {
  if (count_ < 4) return 0.0;
  const double n = static_cast<double>(count_);
  const double s2 = variance();
  const double mu4 = m4_ / n;
  // Var(s^2) = (mu4 - sigma^4 (n-3)/(n-1)) / n
  return std::sqrt(std::max(0.0, (mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n));
}

StreamStats merge_stats(const StreamStats& a, const StreamStats& b) {
  StreamStats out = a;
  out.merge(b);
  return out;
}

StreamStats stats_of(std::span<const double> xs, std::string units) {
  StreamStats s(std::move(units));
  for (double x : xs) s.push(x);
  return s;
}

}  // namespace fpp
