#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fpp/estimator.hpp"
#include "fpp/geodesic.hpp"
#include "fpp/spatial_grid.hpp"
#include "fpp/stream_stats.hpp"

namespace fpp {

// ---------------------------------------------------------------------------
// Parameters and the midpoint family

/// Candidate midpoints in the hyperplane x1 = 0: k * spacing * e2 for
/// k = 1..floor(sqrt(phi_n)), spacing = sqrt(n / phi_n).
struct LambdaFamily {
  double n = 0.0;
  double phi_n = 0.0;
  double spacing = 0.0;
  std::vector<Vec> points;
};

LambdaFamily build_lambda(double n, double phi_n, int dimension);
/// Two mirror images +-k*spacing*e2 (reflection-symmetry checks only).
LambdaFamily symmetric_pair(double n, double phi_n, int dimension, int k = 1);

struct LambdaCheck {
  bool count_ok = false;       // #points == floor(sqrt(phi_n))
  bool separation_ok = false;  // pairwise distance >= sqrt(n / phi_n)
  bool norms_ok = false;       // sqrt(n / phi_n) <= |a| <= sqrt(n)
  bool in_hyperplane = false;  // first coordinate is 0
  bool ok() const { return count_ok && separation_ok && norms_ok && in_hyperplane; }
};
/// Re-evaluates the family conditions directly on the points (relative slack 1e-12).
LambdaCheck check_lambda(const LambdaFamily& family);

struct BenchParams {
  double theta = 0.0;
  double delta = 0.0;
  double c_ubiq = 0.0;

  /// 4 (1 + 1/delta).
  double C_delta() const { return 4.0 * (1.0 + 1.0 / delta); }
  /// K_n = theta log phi(n).
  double K(double phi_n) const;
  /// 2^(-8d) c^d / C_delta.
  static double theta_gate(int dimension, double c, double delta);
  bool within_gate(int dimension) const { return theta < theta_gate(dimension, c_ubiq, delta); }
  /// c = 0.2, delta = 0.5, theta = 0.9 x gate.
  static BenchParams defaults(int dimension);
  void validate() const;
};

/// |Z_{c,K}| = #{k >= 0 : 2 c k <= K - 1}; zero when K < 1.
std::size_t ubiquity_count(double K, double c);

struct EventEstimate {
  std::string name;
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  double p_hat = 0.0;
  double ci95 = 0.0;
  std::optional<double> analytic;
  std::optional<double> analytic_bound;

  static EventEstimate from_counts(std::string name, std::uint64_t hits, std::uint64_t trials);
  double standard_error() const;
};

/// Every consecutive pair satisfies p[i+1] >= p[i] - k * sqrt(se_i^2 + se_{i+1}^2).
bool nondecreasing_within(const std::vector<EventEstimate>& sweep, double k_sigma = 3.0);

/// Box around [-n e1, n e1] padded by n/2, enlarged to hold B(y, reach) for every y.
BoxRegion bench_box(double n, const std::vector<Vec>& centers, double reach, int dimension);

// ---------------------------------------------------------------------------
// Passage-time events

struct MidpointGainResult {
  StreamStats stats{"passage-time"};
  std::vector<double> differences;  // per replica, NaN when excluded
  double min_difference = 0.0;
  std::size_t excluded = 0;
};
/// T(-n e1, 0, n e1) - T(-n e1, n e1) per replica; nonnegative by construction.
MidpointGainResult midpoint_gain(double n, const CampaignSettings& settings);

struct ArgminResult {
  std::vector<EventEstimate> per_y;  // P(A^y) for each y in the family
  std::uint64_t ties = 0;            // replicas whose minimum is not unique
  std::uint64_t max_fired = 0;       // most events firing in one replica (<= 1)
  std::uint64_t trials = 0;
  double sum_p = 0.0;
};
/// Strict argmin over y of T(-n e1, y, n e1).
ArgminResult argmin_lambda(double n, const LambdaFamily& lambda, const CampaignSettings& settings);

struct A24A25Result {
  EventEstimate a24;
  EventEstimate a25;
  double threshold24 = 0.0;
  double threshold25 = 0.0;
};
/// A24: all distinct a, b in lambda U {0} have T(a,b) >= threshold24
///      (default sqrt(n) phi^(-3/5)).
/// A25: all y in lambda U {0} have max_{z = +-n e1} |T(z,y) - E T(z,y)| <= threshold25
///      (default sqrt(n) phi^(-2/3)); E is the campaign mean.
A24A25Result event_A24_A25(double n, const LambdaFamily& lambda, double phi_n,
                           const CampaignSettings& settings,
                           std::optional<double> threshold24 = std::nullopt,
                           std::optional<double> threshold25 = std::nullopt);

// ---------------------------------------------------------------------------
// Set memberships around one midpoint

struct VwxResult {
  bool inV = false;
  bool inW = false;
  bool inX = false;
  int ell_min = 0;
  int ell_max = 0;
  std::size_t lattice_points_V = 0;
  std::size_t lattice_pairs_W = 0;
  double x_gap = 0.0;  // T(-n e1, y, n e1) - T(-n e1, n e1)
  bool certified = true;
};

/// Radii checked for V: integer ell from ceil(K^(1/(2 alpha))) to the first
/// ell whose void probability exp(-intensity Vol B(sqrt(ell))) is below 1e-12.
std::pair<int, int> v_ell_range(double K, double alpha, int dimension, double intensity);
/// Radius around y the sample box must cover for V and W to be decidable.
double vwx_reach(const BenchParams& params, double K, double alpha, int dimension,
                 double intensity);

VwxResult vwx_membership(const SpatialGrid& grid, const Vec& y, const BenchParams& params,
                         double K, double n, const AlphaParam& alpha,
                         const GeodesicOptions& opts = {}, bool check_w = true);

/// Integer points of the closed ball B(center, r).
std::vector<Vec> lattice_points_in_ball(const Vec& center, double r);

struct JumpCheck {
  bool gated = false;     // y in V (the statement applies)
  bool crossing = false;  // the path meets B(y, C_delta K)
  std::optional<double> entry_jump;
  std::optional<double> exit_jump;
  double bound = 0.0;  // K^(1/(2 alpha)) + 1
  bool violated = false;
};
/// Entry/exit jumps of the geodesic through y at the ball B(y, C_delta K),
/// asserted against the bound only when `in_v` holds.
JumpCheck jump_bound_check(const std::vector<Vec>& path, const Vec& y, const BenchParams& params,
                           double K, const AlphaParam& alpha, bool in_v);

/// Monte Carlo frequency of {every ball B(y + 2 c k u, c), k in Z_{c,K}, holds
/// a point} with u = z/|z|, plus the closed form (1 - e^{-intensity Vol B(c)})^k.
EventEstimate ubiquity_event(const Vec& y, const Vec& z, double c, double K, double intensity,
                             std::size_t replicas, std::uint64_t seed, int threads = 0);

/// C_{c,y}(z) at K = C_delta K_n. With `assert_gate`, a theta outside the
/// ubiquity gate throws GateError. analytic_bound = exp(-(1/16) log phi_n).
EventEstimate c_event(const Vec& y, const Vec& z, const BenchParams& params, double phi_n,
                      double intensity, std::size_t replicas, std::uint64_t seed,
                      bool assert_gate, int threads = 0);

/// |gamma(s) - (y + z1)| <= d and |gamma(t) - (y + z2)| <= d at the crossing of
/// B(y, radius). Throws InvalidInput when the path misses the ball.
bool b_event_check(const std::vector<Vec>& path, const Vec& y, const Vec& z1, const Vec& z2,
                   double radius);
/// z1 = floor(gamma(s) - y), z2 = floor(gamma(t) - y).
std::pair<Vec, Vec> canonical_witnesses(const std::vector<Vec>& path, const Vec& y,
                                        double radius);

// ---------------------------------------------------------------------------
// Geodesic audit campaign (local optimality, jump bound, witnesses)

struct GeodesicAuditSummary {
  double n = 0.0;
  std::uint64_t geodesics = 0;
  std::uint64_t uncertified = 0;
  std::uint64_t local_violations = 0;
  std::uint64_t in_v = 0;
  std::uint64_t in_w = 0;
  std::uint64_t in_vw = 0;
  std::uint64_t in_x = 0;
  std::uint64_t crossings = 0;
  std::uint64_t jump_checked = 0;  // gated and crossing
  std::uint64_t jump_violations = 0;
  std::uint64_t witness_checked = 0;
  std::uint64_t witness_outside = 0;  // canonical witness not in B(2 C_delta K) \ {0}
  std::uint64_t b_event_failures = 0;
  double max_entry_jump = 0.0;
};
GeodesicAuditSummary geodesic_audit_campaign(double n, const LambdaFamily& lambda,
                                             const BenchParams& params, double K,
                                             const CampaignSettings& settings);

// ---------------------------------------------------------------------------
// Resampling near the origin

struct ResamplingReplica {
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  std::uint64_t seed2 = 0;
  double T = 0.0;
  double T_resampled = 0.0;
  double difference = 0.0;  // T_resampled - T
  Vec start;                // D(0) in the original configuration
  Vec start_resampled;      // D(0) after planting
  bool certified = false;
};

struct ResamplingResult {
  double n = 0.0;
  double event_probability = 0.0;  // closed-form P(E)
  double implied_variance_bound = 0.0;
  std::vector<ResamplingReplica> replicas;
  std::vector<std::size_t> violations;  // replicas with difference < 1 - 1e-9
  std::size_t uncertified = 0;
  double min_difference = 0.0;
  StreamStats differences{"passage-time"};
};
ResamplingResult resampling_variance_experiment(double n, const CampaignSettings& settings);

// ---------------------------------------------------------------------------
// Rotation invariance

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
/// Kolmogorov tail Q(lambda) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);
/// Two-sample KS with the asymptotic p-value (Stephens' small-sample correction).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);
/// One-sample KS against U(0, 1).
KsResult ks_uniform(std::vector<double> xs);

/// T(0, n u) per replica; padded boxes by default, or the corrupted sampler
/// (bounding box of the segment grown by 1/2) when `padded` is false.
std::vector<double> direction_sample(double n, const Vec& u, const CampaignSettings& settings,
                                     const std::string& tag, bool padded = true);

struct RotationPair {
  std::size_t i = 0;
  std::size_t j = 0;
  KsResult ks;
};
struct RotationResult {
  std::vector<RotationPair> pairs;
  double fraction_not_rejected = 0.0;
  bool passed = false;  // >= 80% of pairs have p > 0.01
};
RotationResult rotation_invariance_test(double n, const std::vector<Vec>& directions,
                                        const CampaignSettings& settings,
                                        const std::string& tag = "rotation", bool padded = true);

}  // namespace fpp
