#pragma once

// Experiment orchestration shared by the campaign runner and the acceptance suite.

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fpp/bench.hpp"
#include "fpp/config.hpp"
#include "fpp/estimator.hpp"

namespace fpp::detail {

struct Outcome {
  std::vector<std::string> files;  // relative to the runner's directory
  bool passed = true;
};

struct CEventRow {
  std::string label;
  double c = 0.0;
  double K = 0.0;
  std::size_t k_count = 0;
  EventEstimate estimate;
  bool gate = false;
  bool within_3sigma = false;
  bool bound_ok = true;
};

struct RotationRun {
  std::vector<KsResult> repetitions;
  std::size_t not_rejected = 0;
  KsResult control;
  bool passed = false;
};

class Runner {
 public:
  Runner(ExperimentConfig config, std::filesystem::path dir, std::ostream* log);

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& dir() const { return dir_; }

  Outcome run(const std::string& experiment);

  const std::vector<EstimateResult>& estimates();
  const FluctuationReport& fluctuation();
  double phi_for(int n);

  // Results of the most recent run of each experiment.
  const std::map<int, GeodesicAuditSummary>& audits() const { return audits_; }
  const std::optional<ResamplingResult>& resampling() const { return resampling_; }
  const std::vector<CEventRow>& c_rows() const { return c_rows_; }
  const std::optional<RotationRun>& rotation() const { return rotation_; }

  void note(const std::string& line);

 private:
  Outcome estimate();
  Outcome fluctuation_outputs();
  Outcome bench_midpoint();
  Outcome bench_argmin();
  Outcome bench_a24a25();
  Outcome bench_audit();
  Outcome bench_c_event();
  Outcome bench_resampling();
  Outcome bench_rotation();

  void write_json(const std::string& file, const nlohmann::ordered_json& j, Outcome& out);
  void write_text(const std::string& file, const std::string& text, Outcome& out);
  nlohmann::ordered_json header(const std::string& name, const std::string& stream) const;

  ExperimentConfig cfg_;
  std::filesystem::path dir_;
  std::ostream* log_;
  std::optional<std::vector<EstimateResult>> estimates_;
  std::optional<FluctuationReport> fluctuation_;
  std::map<int, GeodesicAuditSummary> audits_;
  std::optional<ResamplingResult> resampling_;
  std::vector<CEventRow> c_rows_;
  std::optional<RotationRun> rotation_;
};

nlohmann::ordered_json event_json(const EventEstimate& e);
/// NaN and infinities become null.
nlohmann::ordered_json num(double x);

}  // namespace fpp::detail
