#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpp/bench.hpp"
#include "fpp/estimator.hpp"

namespace fpp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Names accepted in the `experiments` list, in execution order.
const std::vector<std::string>& known_experiments();

struct ExperimentConfig {
  int dimension = 2;
  double alpha = 2.0;
  double intensity = 1.0;
  std::vector<int> n_values{8, 16, 32, 64, 128};
  std::size_t replicas = 400;
  std::uint64_t master_seed = 20240601;
  std::optional<double> padding;  // nullopt serializes as "auto" (n/2)
  double theta = BenchParams::defaults(2).theta;
  double delta = 0.5;
  double c_ubiq = 0.2;
  std::vector<std::string> experiments;
  std::string output_dir = "fpp-out";
  int threads = 0;  // <= 0: all available cores
  /// Replaces the estimated phi_hat(n) when building midpoint families.
  std::optional<double> phi_override;

  // Sizes of the bench and acceptance sub-campaigns.
  std::vector<int> bench_n_values{8, 16, 32, 64};
  std::size_t bench_replicas = 100;
  double resampling_n = 10.0;
  std::size_t resampling_replicas = 1000;
  double rotation_n = 32.0;
  std::size_t rotation_replicas = 300;
  std::size_t rotation_repetitions = 10;
  std::size_t ubiquity_replicas = 10000;
  std::size_t fuzz_instances = 1000;
  std::size_t poisson_samples = 100000;
  std::size_t triples = 10000;

  void validate() const;
  CampaignSettings campaign(std::size_t replica_count) const;
  CampaignSettings campaign() const { return campaign(replicas); }
  BenchParams bench_params() const { return {theta, delta, c_ubiq}; }

  bool operator==(const ExperimentConfig&) const = default;
};

/// Strict parse: unknown keys, wrong types and invariant violations throw ConfigError.
/// Missing keys keep their defaults; a missing theta is 0.9 x the gate for (d, c, delta).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Pretty JSON with every key present; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

/// FPP_OUTPUT_DIR and FPP_THREADS, when set, override the config.
void apply_env_overrides(ExperimentConfig& config);

}  // namespace fpp
