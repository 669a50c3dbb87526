#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpp/geodesic.hpp"
#include "fpp/point_process.hpp"
#include "fpp/stream_stats.hpp"

namespace fpp {

/// A campaign excluded too many replicas or otherwise cannot be trusted.
class CampaignFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CampaignSettings {
  int dimension = 2;
  double alpha = 2.0;
  double intensity = 1.0;
  std::size_t replicas = 400;
  std::uint64_t master_seed = 1;
  /// Box padding around the endpoints' bounding box; nullopt means n/2.
  std::optional<double> padding;
  /// A path that comes closer to the boundary than its cutoff triggers a
  /// fresh sample on a box with doubled padding, at most this many times.
  int max_box_doublings = 3;
  /// Grid cell size in units of the mean spacing intensity^(-1/d).
  double cell_scale = 2.0;
  double max_exclusion_rate = 0.01;
  GeodesicOptions geodesic;
  int threads = 0;

  AlphaParam alpha_param() const { return AlphaParam(alpha); }
  double cell_size() const;
};

/// Bounding box of the segment [a, b] grown by `pad` on every side.
BoxRegion segment_box(const Vec& a, const Vec& b, double pad);

/// Seed of replica `r` in the stream `tag` at scale n.
std::uint64_t replica_seed(std::uint64_t master, const std::string& tag, double n, std::size_t r);

struct ReplicaRecord {
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  double value = 0.0;
  bool certified = false;
  bool boundary_clear = false;
  int box_attempts = 0;
  double max_jump = 0.0;
  std::size_t path_vertices = 0;
  std::size_t audit_violations = 0;
};

/// One geodesic T(from, to) on a padded box around the pair, with the
/// box-doubling retry. Used by every campaign that needs single passage times.
struct PaddedGeodesic {
  GeodesicResult geodesic;
  int box_attempts = 0;
  SpatialGrid grid;  // the sample the geodesic was computed on
};
PaddedGeodesic padded_passage_time(const Vec& from, const Vec& to, double pad,
                                   std::uint64_t seed, const CampaignSettings& settings);

struct EstimateResult {
  double n = 0.0;
  StreamStats stats{"passage-time"};
  std::vector<ReplicaRecord> replicas;
  std::size_t excluded = 0;
  std::size_t boundary_unclear = 0;
  std::size_t audit_violations = 0;
  double max_jump = 0.0;
};

/// Replicated T(0, n e1). Uncertified replicas are excluded from the
/// statistics; more than settings.max_exclusion_rate of them throws CampaignFailure.
EstimateResult estimate_T(double n, const CampaignSettings& settings);

struct FluctuationRow {
  int n = 0;
  std::size_t replicas = 0;
  double mean_T = 0.0;
  double var_T = 0.0;
  double phi_hat = 0.0;
  double fluct_lb = 0.0;
  double ci95_mean = 0.0;
  double ci95_var = 0.0;
  double se_mean = 0.0;
  double se_var = 0.0;
  /// Standard error of fluct_lb (T_mean[n] and T_mean[N] are independent).
  double fluct_se = 0.0;
  std::size_t excluded = 0;
};

struct FluctuationReport {
  double alpha = 0.0;
  int dimension = 0;
  std::size_t replicas = 0;
  std::uint64_t master_seed = 0;
  double g_hat = 0.0;
  /// Slope of an affine fit over the upper half of n; comparison only.
  double g_affine = 0.0;
  std::vector<FluctuationRow> rows;

  const FluctuationRow& row(int n) const;
  double phi_hat(int n) const { return row(n).phi_hat; }
};

/// T_mean[N] / N at the largest N. Biased upward because E T_N / N >= g.
double g_hat(const std::vector<int>& n_values, const std::vector<double>& means);
/// T_mean[n] - n g_hat per n; a downward-biased non-random fluctuation.
std::vector<double> fluctuation_lower_bound(const std::vector<int>& n_values,
                                            const std::vector<double>& means, double g);
double affine_slope_upper_half(const std::vector<int>& n_values, const std::vector<double>& means);

/// sqrt(n / psi), +inf when psi is zero.
double phi_from_variance(double n, double psi);

/// n values must be strictly increasing and match `estimates` one to one.
FluctuationReport build_fluctuation_report(const CampaignSettings& settings,
                                           const std::vector<int>& n_values,
                                           const std::vector<EstimateResult>& estimates);

void write_fluctuation_csv(std::ostream& out, const FluctuationReport& report);
void write_fluctuation_json(std::ostream& out, const FluctuationReport& report);
/// (n, log phi_hat, fluct_lb, fluct_se) rows for the growth diagnostic.
void write_fluctuation_diagnostic_csv(std::ostream& out, const FluctuationReport& report);
void write_replicas_csv(std::ostream& out, const std::vector<EstimateResult>& estimates);
FluctuationReport read_fluctuation_json(std::istream& in);

inline constexpr const char* kFluctuationCsvHeader =
    "alpha,d,n,replicas,mean_T,var_T,phi_hat,g_hat,fluct_lb,ci95_mean,ci95_var,excluded";

}  // namespace fpp
